//! Five questions as local observables on `(C^3)^{⊗5}`.
//!
//! Whatever the (possibly entangled) initial state, measuring any series of
//! local observables on the first four factors leaves the marginal of the
//! fifth factor untouched. Two different leading-question series therefore
//! cannot produce different statistics for the final question.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::hilbert::{
    frame_from_parameters, kron, partial_trace, ComplexMatrix, FrameParameters, OrthonormalFrame,
    C_ZERO,
};
use crate::state::{DensityMatrix, ProbabilityVector, PureState};

/// Five three-level factors.
pub const FACTOR_DIMS: [usize; 5] = [3, 3, 3, 3, 3];
/// Zero-based index of the untouched factor.
pub const ISOLATED_FACTOR: usize = 4;
/// Largest total dimension `embed_local` will build.
pub const MAX_EMBED_DIM: usize = 1024;

/// Rank-one projectors of `frame` placed on tensor factor `factor` (zero
/// based) with identities elsewhere.
pub fn embed_local(frame: &OrthonormalFrame, factor: usize, dims: &[usize]) -> Result<Vec<ComplexMatrix>> {
    let total: usize = dims.iter().product();
    if total > MAX_EMBED_DIM {
        return Err(Error::DimensionMismatch(format!(
            "total dimension {total} exceeds {MAX_EMBED_DIM}"
        )));
    }
    if factor >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "factor {factor} out of range for {} factors",
            dims.len()
        )));
    }
    if dims[factor] != frame.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor {factor} has dimension {}, frame has {}",
            dims[factor],
            frame.dim()
        )));
    }
    let left = ComplexMatrix::identity(dims[..factor].iter().product());
    let right = ComplexMatrix::identity(dims[factor + 1..].iter().product());
    Ok(frame
        .projectors()
        .iter()
        .map(|p| kron(&kron(&left, p), &right))
        .collect())
}

/// Ordered local measurements on the first four factors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalSeries {
    steps: Vec<(usize, OrthonormalFrame)>,
}

impl LocalSeries {
    /// Factor indices are zero based and must avoid [`ISOLATED_FACTOR`].
    pub fn new(steps: Vec<(usize, OrthonormalFrame)>) -> Result<Self> {
        for (i, (factor, frame)) in steps.iter().enumerate() {
            if *factor >= ISOLATED_FACTOR {
                return Err(Error::InvalidSeries(format!(
                    "step {i} acts on factor {factor}; only factors 0..{ISOLATED_FACTOR} may be measured"
                )));
            }
            if frame.dim() != FACTOR_DIMS[*factor] {
                return Err(Error::InvalidSeries(format!(
                    "step {i} frame has dimension {}",
                    frame.dim()
                )));
            }
        }
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[(usize, OrthonormalFrame)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn strides(dims: &[usize], factor: usize) -> (usize, usize, usize) {
    let d = dims[factor];
    let right: usize = dims[factor + 1..].iter().product();
    let left: usize = dims[..factor].iter().product();
    (left, d, right)
}

/// `(I ⊗ u ⊗ I) m` with `u` on `factor`.
fn local_mul_left(m: &ComplexMatrix, u: &ComplexMatrix, dims: &[usize], factor: usize) -> ComplexMatrix {
    let (left, d, right) = strides(dims, factor);
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, m.cols());
    let mut buf = vec![C_ZERO; d];
    for col in 0..m.cols() {
        for l in 0..left {
            for r in 0..right {
                let idx = |a: usize| (l * d + a) * right + r;
                for (a, b) in buf.iter_mut().enumerate() {
                    *b = m[(idx(a), col)];
                }
                for a in 0..d {
                    let mut acc = C_ZERO;
                    for (b, x) in buf.iter().enumerate() {
                        acc += u[(a, b)] * x;
                    }
                    out[(idx(a), col)] = acc;
                }
            }
        }
    }
    out
}

/// `m (I ⊗ u ⊗ I)` with `u` on `factor`.
fn local_mul_right(m: &ComplexMatrix, u: &ComplexMatrix, dims: &[usize], factor: usize) -> ComplexMatrix {
    let (left, d, right) = strides(dims, factor);
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    let mut buf = vec![C_ZERO; d];
    for row in 0..m.rows() {
        for l in 0..left {
            for r in 0..right {
                let idx = |a: usize| (l * d + a) * right + r;
                for (a, b) in buf.iter_mut().enumerate() {
                    *b = m[(row, idx(a))];
                }
                for b in 0..d {
                    let mut acc = C_ZERO;
                    for (a, x) in buf.iter().enumerate() {
                        acc += x * u[(a, b)];
                    }
                    out[(row, idx(b))] = acc;
                }
            }
        }
    }
    out
}

/// Lüders update by the embedded projectors of `frame` on `factor`,
/// computed by rotating that factor into the frame, dropping coherences
/// between different outcomes, and rotating back. Equal to
/// `sum_i P_i rho P_i` with `P_i` from [`embed_local`].
pub fn local_lueders_update(
    state: &DensityMatrix,
    frame: &OrthonormalFrame,
    factor: usize,
    dims: &[usize],
) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if state.dim() != total || factor >= dims.len() || dims[factor] != frame.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with factor {factor} of {dims:?}",
            state.dim()
        )));
    }
    let u = frame.as_unitary();
    let u_dag = u.adjoint();
    let mut rotated = local_mul_left(&local_mul_right(state.matrix(), u, dims, factor), &u_dag, dims, factor);
    let (_, d, right) = strides(dims, factor);
    let digit = |i: usize| (i / right) % d;
    for i in 0..total {
        for j in 0..total {
            if digit(i) != digit(j) {
                rotated[(i, j)] = C_ZERO;
            }
        }
    }
    let back = local_mul_left(&local_mul_right(&rotated, &u_dag, dims, factor), u, dims, factor);
    Ok(DensityMatrix::from_matrix_unchecked(back))
}

/// Sequential Lüders updates, one per step of the series.
pub fn apply_series(state: &DensityMatrix, series: &LocalSeries) -> Result<DensityMatrix> {
    series
        .steps()
        .iter()
        .try_fold(state.clone(), |rho, (factor, frame)| {
            local_lueders_update(&rho, frame, *factor, &FACTOR_DIMS)
        })
}

/// Answer distribution of the fifth factor in its standard basis.
pub fn fifth_marginal(state: &DensityMatrix) -> Result<ProbabilityVector> {
    factor_marginal(state, ISOLATED_FACTOR, &FACTOR_DIMS)
}

pub fn factor_marginal(state: &DensityMatrix, factor: usize, dims: &[usize]) -> Result<ProbabilityVector> {
    let reduced = partial_trace(state.matrix(), dims, factor)?;
    ProbabilityVector::new(reduced.diagonal().iter().map(|z| z.re).collect())
}

/// Largest componentwise gap between the fifth marginals after each series.
pub fn no_signalling_check(state: &DensityMatrix, series_a: &LocalSeries, series_b: &LocalSeries) -> Result<f64> {
    let a = fifth_marginal(&apply_series(state, series_a)?)?;
    let b = fifth_marginal(&apply_series(state, series_b)?)?;
    Ok(a.max_abs_diff(&b))
}

/// Normalized complex Gaussian vector.
pub fn random_pure_state(dim: usize, rng: &mut impl Rng) -> PureState {
    let amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps, "product").expect("gaussian vector is nonzero")
}

pub fn random_frame(rng: &mut impl Rng) -> OrthonormalFrame {
    let tau = std::f64::consts::TAU;
    frame_from_parameters(&FrameParameters::from_array(std::array::from_fn(|_| {
        rng.random_range(0.0..tau)
    })))
}

/// `steps` measurements on uniformly chosen factors among the first four.
pub fn random_series(steps: usize, rng: &mut impl Rng) -> LocalSeries {
    let steps = (0..steps)
        .map(|_| (rng.random_range(0..ISOLATED_FACTOR), random_frame(rng)))
        .collect();
    LocalSeries::new(steps).expect("factors are in range")
}

/// Question `j` (j < 4) of a fitted chain measured on factor `j`. When the
/// first question was isolated it is measured in its own standard basis.
pub fn series_from_fit(fit: &FitResult) -> Result<LocalSeries> {
    let mut frames: Vec<OrthonormalFrame> = Vec::new();
    if fit.isolate_first {
        frames.push(OrthonormalFrame::standard(3));
    }
    frames.extend(fit.frames.iter().cloned());
    if frames.len() < ISOLATED_FACTOR {
        return Err(Error::InvalidSeries(format!(
            "fit covers {} questions, need at least {ISOLATED_FACTOR}",
            frames.len()
        )));
    }
    LocalSeries::new(frames.into_iter().take(ISOLATED_FACTOR).enumerate().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Per-trial generator: stream `trial` of the base seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Random entangled pure states against pairs of random series.
pub fn no_signalling_suite(trials: usize, steps: usize, seed: u64) -> Result<SuiteReport> {
    let dim: usize = FACTOR_DIMS.iter().product();
    let deviations = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let state = random_pure_state(dim, &mut rng).to_density();
            let a = random_series(steps, &mut rng);
            let b = random_series(steps, &mut rng);
            no_signalling_check(&state, &a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(SuiteReport {
        trials,
        steps,
        seed,
        deviations,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::lueders_update;

    fn ghz_like() -> DensityMatrix {
        // (|11111> + |22222>)/sqrt2 with levels 1 and 2 -> indices 0 and 1
        let dim = 243;
        let mut amps = vec![C_ZERO; dim];
        amps[0] = Complex64::new(1.0, 0.0);
        amps[(0..5).fold(0, |acc, _| acc * 3 + 1)] = Complex64::new(1.0, 0.0);
        PureState::normalized(amps, "product").unwrap().to_density()
    }

    #[test]
    fn embed_standard_blocks() {
        let ps = embed_local(&OrthonormalFrame::standard(3), 0, &[3, 3]).unwrap();
        assert_eq!(ps.len(), 3);
        for (i, p) in ps.iter().enumerate() {
            let mut diag = [0.0; 9];
            diag[3 * i..3 * i + 3].fill(1.0);
            assert_eq!(p, &ComplexMatrix::from_diagonal(&diag));
        }
    }

    #[test]
    fn embed_complete_on_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = random_frame(&mut rng);
        let ps = embed_local(&frame, 2, &FACTOR_DIMS).unwrap();
        let sum = ps.iter().fold(ComplexMatrix::zeros(243, 243), |acc, p| &acc + p);
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(243)) < 1e-12);
    }

    #[test]
    fn embed_then_trace_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frame = random_frame(&mut rng);
        let dims = [3, 3, 3];
        let ps = embed_local(&frame, 1, &dims).unwrap();
        for (p_full, p_local) in ps.iter().zip(frame.projectors()) {
            let back = partial_trace(p_full, &dims, 1).unwrap();
            // direct contraction: only diagonal blocks of the other factors contribute
            let mut oracle = ComplexMatrix::zeros(3, 3);
            for a in 0..3 {
                for b in 0..3 {
                    for l in 0..3 {
                        for r in 0..3 {
                            oracle[(a, b)] += p_full[((l * 3 + a) * 3 + r, (l * 3 + b) * 3 + r)];
                        }
                    }
                }
            }
            assert!(back.max_abs_diff(&oracle) < 1e-14);
            assert!(back.max_abs_diff(&p_local.scale(Complex64::new(9.0, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn embed_guards() {
        let f = OrthonormalFrame::standard(3);
        assert!(embed_local(&f, 0, &[3, 3, 3, 3, 3, 3, 3]).is_err());
        assert!(embed_local(&f, 2, &[3, 3]).is_err());
        assert!(embed_local(&f, 0, &[2, 3]).is_err());
    }

    #[test]
    fn local_update_matches_generic_lueders() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = [3, 3, 3];
        let state = random_pure_state(27, &mut rng).to_density();
        for factor in 0..3 {
            let frame = random_frame(&mut rng);
            let fast = local_lueders_update(&state, &frame, factor, &dims).unwrap();
            let slow = lueders_update(&state, &embed_local(&frame, factor, &dims).unwrap()).unwrap();
            assert!(fast.matrix().max_abs_diff(slow.matrix()) < 1e-14);
        }
    }

    #[test]
    fn local_update_matches_generic_on_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = random_pure_state(243, &mut rng).to_density();
        let frame = random_frame(&mut rng);
        let fast = local_lueders_update(&state, &frame, 3, &FACTOR_DIMS).unwrap();
        let slow = lueders_update(&state, &embed_local(&frame, 3, &FACTOR_DIMS).unwrap()).unwrap();
        assert!(fast.matrix().max_abs_diff(slow.matrix()) < 1e-14);
    }

    #[test]
    fn series_rejects_fifth_factor() {
        let f = OrthonormalFrame::standard(3);
        assert!(LocalSeries::new(vec![(4, f.clone())]).is_err());
        assert!(LocalSeries::new(vec![(0, OrthonormalFrame::standard(2))]).is_err());
        assert!(LocalSeries::new(vec![(3, f)]).is_ok());
    }

    #[test]
    fn empty_series_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let state = random_pure_state(243, &mut rng).to_density();
        let out = apply_series(&state, &LocalSeries::empty()).unwrap();
        assert_eq!(out, state);
        assert_eq!(no_signalling_check(&state, &LocalSeries::empty(), &LocalSeries::empty()).unwrap(), 0.0);
    }

    #[test]
    fn fifth_marginal_cases() {
        let m = fifth_marginal(&DensityMatrix::maximally_mixed(243)).unwrap();
        for x in m.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
        let g = fifth_marginal(&ghz_like()).unwrap();
        assert!(g.max_abs_diff(&ProbabilityVector::new(vec![0.5, 0.5, 0.0]).unwrap()) < 1e-14);
        assert!(fifth_marginal(&DensityMatrix::maximally_mixed(9)).is_err());
    }

    #[test]
    fn product_state_keeps_fifth_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let last = ComplexMatrix::from_diagonal(&[0.45, 0.17, 0.38]);
        let mut rho = ComplexMatrix::identity(1);
        for _ in 0..4 {
            let psi = random_pure_state(3, &mut rng).to_density();
            rho = kron(&rho, psi.matrix());
        }
        rho = kron(&rho, &last);
        let state = DensityMatrix::new(rho).unwrap();
        let series = random_series(6, &mut rng);
        let out = apply_series(&state, &series).unwrap();
        let m = fifth_marginal(&out).unwrap();
        assert!(m.max_abs_diff(&ProbabilityVector::new(vec![0.45, 0.17, 0.38]).unwrap()) < 1e-14);
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(0, 0).random();
        let b: u64 = trial_rng(0, 1).random();
        assert_ne!(a, b);
        let c: u64 = trial_rng(0, 1).random();
        assert_eq!(b, c);
    }
}
