use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::probability::ProbabilityVector;
use crate::error::{Error, Result};
use crate::hilbert::{norm, ComplexMatrix, DEFAULT_TOL};

/// Unit vector together with the name of the basis its components refer to.
///
/// The label is bookkeeping only; nothing numeric depends on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    basis_label: String,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, basis_label: impl Into<String>) -> Result<Self> {
        let n = norm(&amplitudes);
        if amplitudes.is_empty() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "state vector has norm {n}, expected 1"
            )));
        }
        Ok(Self {
            amplitudes,
            basis_label: basis_label.into(),
        })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>, basis_label: impl Into<String>) -> Result<Self> {
        let n = norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        let scaled = amplitudes.into_iter().map(|z| z / n).collect();
        Self::new(scaled, basis_label)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(ComplexMatrix::projector(&self.amplitudes))
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::validate(&matrix, DEFAULT_TOL)?;
        Ok(Self(matrix))
    }

    pub fn validate(m: &ComplexMatrix, tol: f64) -> Result<()> {
        if !m.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        if !m.is_hermitian(tol) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        if !m.is_psd(tol) {
            return Err(Error::InvalidState("matrix has a negative eigenvalue".into()));
        }
        Ok(())
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(p: &ProbabilityVector) -> Self {
        Self(ComplexMatrix::from_diagonal(p.as_slice()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // for Hermitian rho, tr(rho^2) = sum |rho_ij|^2
        self.0.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Populations in the standard basis.
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(s: &PureState) -> Self {
        s.to_density()
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[0.6, 0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[1.1, -0.1])).is_err());
        let skew = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]);
        assert!(DensityMatrix::new(skew).is_err());
    }

    #[test]
    fn pure_state_norm_is_checked() {
        let one = Complex64::new(1.0, 0.0);
        assert!(PureState::new(vec![one, one], "z").is_err());
        let s = PureState::normalized(vec![one, one], "z").unwrap();
        assert_eq!(s.basis_label(), "z");
        assert!((s.to_density().purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn purity_of_mixed_states() {
        assert!((DensityMatrix::maximally_mixed(4).purity() - 0.25).abs() < 1e-15);
    }
}
