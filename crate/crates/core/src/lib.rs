//! Quantum-probability models of survey questions asked in sequence.
//!
//! Questions are orthonormal frames on a small Hilbert space, states of mind
//! are density matrices, and asking a question applies the Lüders update.
//! On top of that the crate provides:
//!
//! - [`sequential`]: closed-form two-question interference and the spin-1/2
//!   order effect,
//! - [`feasibility`]: classical total-probability checks, order effects,
//!   contraction and majorization tests on observed chains,
//! - [`fit`]: explicit frame sequences reproducing a chain, with the first
//!   question isolated on its own tensor factor,
//! - [`nosignal`]: a 243-dimensional simulation showing local observables
//!   cannot move the marginal of an untouched question.

pub mod cli;
pub mod error;
pub mod feasibility;
pub mod fit;
pub mod hilbert;
pub mod nosignal;
pub mod sequential;
pub mod state;
pub mod survey;

pub use error::{Error, Result};
