//! States of mind and the measurements that act on them.

mod density;
mod measure;
mod probability;

pub use density::{DensityMatrix, PureState};
pub use measure::{
    binary_projectors, degenerate_yes_probability, lueders_update, lueders_update_frame,
    outcome_probabilities, povm_probabilities, square_root_embed, square_root_embed_labeled,
    subspace_projector, validate_projectors, Povm, QUESTION_BASIS,
};
pub use probability::{ProbabilityVector, SUM_TOL};
