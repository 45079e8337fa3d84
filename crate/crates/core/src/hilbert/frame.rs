use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{inner, ComplexMatrix, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Ordered orthonormal basis; vector `i` is the eigenvector for answer `i`.
///
/// Stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct OrthonormalFrame {
    columns: ComplexMatrix,
}

impl OrthonormalFrame {
    pub fn from_vectors(vectors: &[Vec<Complex64>]) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidFrame(format!(
                "need {dim} vectors of length {dim}"
            )));
        }
        Self::from_unitary(ComplexMatrix::from_fn(dim, dim, |i, j| vectors[j][i]))
    }

    /// Columns of `u` become the frame vectors.
    pub fn from_unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_unitary(DEFAULT_TOL) {
            return Err(Error::InvalidFrame(
                "vectors are not orthonormal within 1e-10".into(),
            ));
        }
        Ok(Self { columns: u })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            columns: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.rows()
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.columns.column(i)
    }

    pub fn vectors(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    pub fn as_unitary(&self) -> &ComplexMatrix {
        &self.columns
    }

    /// Rank-one projectors `|Q^i><Q^i|`, in frame order.
    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        self.vectors()
            .iter()
            .map(|v| ComplexMatrix::projector(v))
            .collect()
    }

    /// Largest `|<Q^i|Q^j> - delta_ij|` over all pairs.
    pub fn gram_deviation(&self) -> f64 {
        let vs = self.vectors();
        let mut worst = 0.0f64;
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(a, b) - target).norm());
            }
        }
        worst
    }

    /// Frame whose vectors are `basis * u` column by column, i.e. the columns
    /// of `u` read as coordinates in `basis`.
    pub fn rotated(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::from_unitary(self.columns.try_mul(u)?)
    }
}

impl TryFrom<ComplexMatrix> for OrthonormalFrame {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::from_unitary(m)
    }
}

impl From<OrthonormalFrame> for ComplexMatrix {
    fn from(f: OrthonormalFrame) -> Self {
        f.columns
    }
}

/// Three angles and three phases (radians) of a 3x3 unitary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameParameters {
    pub angles: [f64; 3],
    pub phases: [f64; 3],
}

/// Rotation planes, in factor order.
const PLANES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl FrameParameters {
    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            angles: [x[0], x[1], x[2]],
            phases: [x[3], x[4], x[5]],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        let [a, b, c] = self.angles;
        let [d, e, f] = self.phases;
        [a, b, c, d, e, f]
    }

    /// Every component reduced into `[0, 2pi)`.
    pub fn canonical(self) -> Self {
        let tau = std::f64::consts::TAU;
        let x = self.to_array().map(|v| {
            let r = v.rem_euclid(tau);
            if r >= tau { 0.0 } else { r }
        });
        Self::from_array(x)
    }

    /// The one phase combination that survives in `|U_ki|^2`.
    ///
    /// `G12(a,p) = P2(p) R12(a) P2(-p)` with `P_k` a phase on axis `k`; pushing
    /// the phase factors outward through the commuting rotations leaves a
    /// single inner phase `p12 - p13 + p23`. The orthogonal directions
    /// `(1, 1, 0)` and `(0, 1, 1)` in phase space are redundant.
    pub fn effective_phase(&self) -> f64 {
        self.phases[0] - self.phases[1] + self.phases[2]
    }
}

fn givens(dim: usize, plane: (usize, usize), angle: f64, phase: f64) -> ComplexMatrix {
    let (j, k) = plane;
    let (s, c) = angle.sin_cos();
    let e = Complex64::from_polar(1.0, phase);
    let mut g = ComplexMatrix::identity(dim);
    g[(j, j)] = Complex64::new(c, 0.0);
    g[(k, k)] = Complex64::new(c, 0.0);
    g[(j, k)] = -e.conj() * s;
    g[(k, j)] = e * s;
    g
}

fn givens_d_angle(dim: usize, plane: (usize, usize), angle: f64, phase: f64) -> ComplexMatrix {
    let (j, k) = plane;
    let (s, c) = angle.sin_cos();
    let e = Complex64::from_polar(1.0, phase);
    let mut g = ComplexMatrix::zeros(dim, dim);
    g[(j, j)] = Complex64::new(-s, 0.0);
    g[(k, k)] = Complex64::new(-s, 0.0);
    g[(j, k)] = -e.conj() * c;
    g[(k, j)] = e * c;
    g
}

fn givens_d_phase(dim: usize, plane: (usize, usize), angle: f64, phase: f64) -> ComplexMatrix {
    let (j, k) = plane;
    let s = angle.sin();
    let e = Complex64::from_polar(1.0, phase);
    let i = Complex64::i();
    let mut g = ComplexMatrix::zeros(dim, dim);
    g[(j, k)] = i * e.conj() * s;
    g[(k, j)] = i * e * s;
    g
}

/// `G12(a0, p0) * G13(a1, p1) * G23(a2, p2)`, each a complex Givens rotation.
pub fn unitary_from_parameters(p: &FrameParameters) -> ComplexMatrix {
    let factors: Vec<ComplexMatrix> = PLANES
        .iter()
        .enumerate()
        .map(|(n, &plane)| givens(3, plane, p.angles[n], p.phases[n]))
        .collect();
    &(&factors[0] * &factors[1]) * &factors[2]
}

/// The unitary and its partial derivatives with respect to
/// `[a0, a1, a2, p0, p1, p2]`.
pub fn unitary_with_gradient(p: &FrameParameters) -> (ComplexMatrix, [ComplexMatrix; 6]) {
    let g: Vec<ComplexMatrix> = PLANES
        .iter()
        .enumerate()
        .map(|(n, &plane)| givens(3, plane, p.angles[n], p.phases[n]))
        .collect();
    let product = |n: usize, dn: ComplexMatrix| -> ComplexMatrix {
        let mut parts = [g[0].clone(), g[1].clone(), g[2].clone()];
        parts[n] = dn;
        &(&parts[0] * &parts[1]) * &parts[2]
    };
    let grads = std::array::from_fn(|idx| {
        let n = idx % 3;
        let (a, ph) = (p.angles[n], p.phases[n]);
        if idx < 3 {
            product(n, givens_d_angle(3, PLANES[n], a, ph))
        } else {
            product(n, givens_d_phase(3, PLANES[n], a, ph))
        }
    });
    (&(&g[0] * &g[1]) * &g[2], grads)
}

/// Orthonormal frame on C^3 given by the columns of the parametrized unitary.
pub fn frame_from_parameters(p: &FrameParameters) -> OrthonormalFrame {
    OrthonormalFrame {
        columns: unitary_from_parameters(p),
    }
}
