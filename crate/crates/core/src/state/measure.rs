use num_complex::Complex64;

use super::density::{DensityMatrix, PureState};
use super::probability::ProbabilityVector;
use crate::error::{Error, Result};
use crate::hilbert::{inner, ComplexMatrix, OrthonormalFrame, DEFAULT_TOL};

/// Basis label used for states built directly from answer distributions.
pub const QUESTION_BASIS: &str = "question";

/// Amplitudes are the nonnegative square roots of the probabilities.
pub fn square_root_embed(p: &ProbabilityVector) -> PureState {
    square_root_embed_labeled(p, QUESTION_BASIS)
}

pub fn square_root_embed_labeled(p: &ProbabilityVector, basis_label: &str) -> PureState {
    let amps: Vec<Complex64> = p
        .as_slice()
        .iter()
        .map(|&x| Complex64::new(x.sqrt(), 0.0))
        .collect();
    // sum of sqrt(p)^2 can drift from 1 by a few ulps
    PureState::normalized(amps, basis_label).expect("probability vector has unit mass")
}

fn check_dim(state: &DensityMatrix, dim: usize, what: &str) -> Result<()> {
    if state.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, {what} has dimension {dim}",
            state.dim()
        )));
    }
    Ok(())
}

/// Entry `i` is `<Q^i|rho|Q^i>`.
pub fn outcome_probabilities(
    state: &DensityMatrix,
    frame: &OrthonormalFrame,
) -> Result<ProbabilityVector> {
    check_dim(state, frame.dim(), "frame")?;
    let probs = frame
        .vectors()
        .iter()
        .map(|v| state.matrix().expectation(v).map(|z| z.re))
        .collect::<Result<Vec<f64>>>()?;
    ProbabilityVector::new(probs)
}

/// Checks `P_i P_j = delta_ij P_i`, Hermiticity and completeness.
pub fn validate_projectors(projectors: &[ComplexMatrix], dim: usize, tol: f64) -> Result<()> {
    if projectors.is_empty() {
        return Err(Error::InvalidProjectors("empty projector set".into()));
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for (i, p) in projectors.iter().enumerate() {
        if p.rows() != dim || !p.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "projector {i} is {}x{}, state dimension is {dim}",
                p.rows(),
                p.cols()
            )));
        }
        if !p.is_hermitian(tol) {
            return Err(Error::InvalidProjectors(format!("projector {i} is not Hermitian")));
        }
        if (p * p).max_abs_diff(p) > tol {
            return Err(Error::InvalidProjectors(format!("projector {i} is not idempotent")));
        }
        for (j, q) in projectors.iter().enumerate().skip(i + 1) {
            if (p * q).max_abs_diff(&ComplexMatrix::zeros(dim, dim)) > tol {
                return Err(Error::InvalidProjectors(format!(
                    "projectors {i} and {j} are not orthogonal"
                )));
            }
        }
        sum = &sum + p;
    }
    if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > tol {
        return Err(Error::InvalidProjectors("projectors do not sum to identity".into()));
    }
    Ok(())
}

/// Non-selective Lüders update `rho -> sum_i P_i rho P_i`.
///
/// Projectors may have any rank, so degenerate questions go through here too.
pub fn lueders_update(state: &DensityMatrix, projectors: &[ComplexMatrix]) -> Result<DensityMatrix> {
    validate_projectors(projectors, state.dim(), DEFAULT_TOL)?;
    let rho = state.matrix();
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for p in projectors {
        out = &out + &(&(p * rho) * p);
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Lüders update with the rank-one projectors of `frame`.
pub fn lueders_update_frame(state: &DensityMatrix, frame: &OrthonormalFrame) -> Result<DensityMatrix> {
    check_dim(state, frame.dim(), "frame")?;
    lueders_update(state, &frame.projectors())
}

/// Positive operator-valued measure: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects
            .first()
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?
            .rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (i, e) in effects.iter().enumerate() {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::InvalidPovm(format!("effect {i} has the wrong shape")));
            }
            if !e.is_psd(DEFAULT_TOL) {
                return Err(Error::InvalidPovm(format!("effect {i} is not PSD")));
            }
            sum = &sum + e;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > DEFAULT_TOL {
            return Err(Error::InvalidPovm("effects do not sum to identity".into()));
        }
        Ok(Self { effects })
    }

    pub fn from_frame(frame: &OrthonormalFrame) -> Self {
        Self {
            effects: frame.projectors(),
        }
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }
}

/// Entry `i` is `tr(rho E_i)`. No post-measurement state is defined.
pub fn povm_probabilities(state: &DensityMatrix, povm: &Povm) -> Result<ProbabilityVector> {
    check_dim(state, povm.dim(), "POVM")?;
    let probs = povm
        .effects()
        .iter()
        .map(|e| (state.matrix() * e).trace().re)
        .collect();
    ProbabilityVector::new(probs)
}

/// Projector onto the span of orthonormal vectors.
pub fn subspace_projector(basis: &[Vec<Complex64>], dim: usize) -> Result<ComplexMatrix> {
    if basis.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "subspace vectors must have length {dim}"
        )));
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            if (inner(a, b) - target).norm() > DEFAULT_TOL {
                return Err(Error::InvalidFrame(format!(
                    "subspace vectors {i} and {j} are not orthonormal"
                )));
            }
        }
    }
    let mut p = ComplexMatrix::zeros(dim, dim);
    for v in basis {
        p = &p + &ComplexMatrix::projector(v);
    }
    Ok(p)
}

/// Probability of "yes" for a binary question whose yes-answer is a whole
/// subspace: `tr(rho P_subspace)`.
pub fn degenerate_yes_probability(state: &DensityMatrix, subspace_basis: &[Vec<Complex64>]) -> Result<f64> {
    if subspace_basis.is_empty() || subspace_basis.len() > state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace of {} vectors in dimension {}",
            subspace_basis.len(),
            state.dim()
        )));
    }
    let p = subspace_projector(subspace_basis, state.dim())?;
    Ok((state.matrix() * &p).trace().re.clamp(0.0, 1.0))
}

/// Projectors of the binary question "is the answer in the span of
/// `subspace_basis`?": the subspace projector and its complement.
pub fn binary_projectors(subspace_basis: &[Vec<Complex64>], dim: usize) -> Result<[ComplexMatrix; 2]> {
    let yes = subspace_projector(subspace_basis, dim)?;
    let no = &ComplexMatrix::identity(dim) - &yes;
    Ok([yes, no])
}
