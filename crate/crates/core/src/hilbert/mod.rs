//! Dense complex linear algebra for small Hilbert spaces (dimension 2 to 243):
//! matrices, Kronecker products, partial traces and the Givens-rotation
//! parametrization of orthonormal frames on C^3.

mod frame;
mod matrix;

pub use frame::{
    frame_from_parameters, unitary_from_parameters, unitary_with_gradient, FrameParameters,
    OrthonormalFrame,
};
pub use matrix::{
    inner, kron, kron_vec, norm, partial_trace, ComplexMatrix, C_ONE, C_ZERO, DEFAULT_TOL,
};
