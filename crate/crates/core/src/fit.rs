//! Fitting orthonormal frames on C^3 so that sequential Lüders statistics
//! reproduce an observed question chain.
//!
//! After a question with answer probabilities `d` has been asked, the state
//! is `rho = sum_k d_k |b_k><b_k|`. The next question's frame is written as
//! `Q^i = sum_k U_ki b_k` with `U` from [`unitary_from_parameters`], so
//! `<Q^i|rho|Q^i> = sum_k |U_ki|^2 d_k`. Two of the three phases drop out of
//! that expression; three angles and one phase remain to meet two
//! independent constraints.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{majorization_slack, SurveyChain};
use crate::hilbert::{
    unitary_from_parameters, unitary_with_gradient, ComplexMatrix, FrameParameters,
    OrthonormalFrame,
};
use crate::nosignal::embed_local;
use crate::state::{
    lueders_update_frame, outcome_probabilities, povm_probabilities, square_root_embed,
    DensityMatrix, Povm, ProbabilityVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of multi-starts; the first always starts at the identity.
    pub starts: usize,
    /// Sum-of-squares objective a start must reach to count as converged.
    pub residual_threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Majorization slack tolerated (and projected away) before a target is
    /// rejected as infeasible.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            residual_threshold: 1e-18,
            max_iterations: 500,
            seed: 0,
            tol: 0.0,
        }
    }
}

/// Nearest point (Euclidean) to `target` among distributions majorized by
/// `current`, i.e. the projection onto the permutohedron of `current`.
///
/// Sorting `target` descending, the projection is `target - v` where `v` is
/// the non-increasing isotonic regression of `target_sorted -
/// current_sorted`; the target's ordering is kept.
pub fn project_to_majorized(current: &ProbabilityVector, target: &ProbabilityVector) -> Result<ProbabilityVector> {
    let n = current.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "current has {n} entries, target has {}",
            target.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]).then(a.cmp(&b)));
    let cs = current.sorted_desc();
    let diff: Vec<f64> = order.iter().zip(&cs).map(|(&i, c)| target[i] - c).collect();
    let fitted = isotonic_non_increasing(&diff);
    let mut out = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        out[i] = target[i] - fitted[k];
    }
    ProbabilityVector::new(out)
}

/// Pool-adjacent-violators for the constraint `v_1 >= v_2 >= ... >= v_n`.
fn isotonic_non_increasing(y: &[f64]) -> Vec<f64> {
    // blocks of (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("at least one block");
            *last = ((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// `<Q^i|rho|Q^i>` for `rho` diagonal with entries `spectrum` in the basis
/// the parameters are expressed in.
pub fn diagonal_expectations(params: &FrameParameters, spectrum: &[f64]) -> [f64; 3] {
    let u = unitary_from_parameters(params);
    std::array::from_fn(|i| (0..3).map(|k| u[(k, i)].norm_sqr() * spectrum[k]).sum())
}

/// Sum of squared errors between expectations and target.
pub fn objective(params: &FrameParameters, spectrum: &[f64], target: &[f64]) -> f64 {
    diagonal_expectations(params, spectrum)
        .iter()
        .zip(target)
        .map(|(e, t)| (e - t).powi(2))
        .sum()
}

fn residual_and_jacobian(x: &[f64; 6], spectrum: &[f64], target: &[f64]) -> (SVector<f64, 3>, SMatrix<f64, 3, 6>) {
    let (u, grads) = unitary_with_gradient(&FrameParameters::from_array(*x));
    let mut r = SVector::<f64, 3>::zeros();
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    for i in 0..3 {
        r[i] = (0..3).map(|k| u[(k, i)].norm_sqr() * spectrum[k]).sum::<f64>() - target[i];
        for (p, g) in grads.iter().enumerate() {
            j[(i, p)] = (0..3)
                .map(|k| 2.0 * (u[(k, i)].conj() * g[(k, i)]).re * spectrum[k])
                .sum();
        }
    }
    (r, j)
}

#[derive(Debug, Clone, Copy)]
struct LocalSolution {
    params: [f64; 6],
    cost: f64,
    iterations: usize,
}

/// Levenberg-Marquardt on the 3 residuals over all 6 parameters. The
/// Jacobian has rank at most 4; the damping keeps the normal equations
/// solvable.
fn levenberg_marquardt(start: [f64; 6], spectrum: &[f64], target: &[f64], opts: &FitOptions) -> LocalSolution {
    let mut x = start;
    let (mut r, mut j) = residual_and_jacobian(&x, spectrum, target);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let polish_to = opts.residual_threshold * 1e-6;
    let mut iterations = 0;
    while iterations < opts.max_iterations && cost > polish_to {
        iterations += 1;
        let jt = j.transpose();
        let normal = jt * j;
        let grad = jt * r;
        let mut improved = false;
        while lambda < 1e16 {
            let damped = normal + SMatrix::<f64, 6, 6>::identity() * lambda;
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-grad))) else {
                lambda *= 4.0;
                continue;
            };
            let trial: [f64; 6] = std::array::from_fn(|k| x[k] + step[k]);
            let (tr, tj) = residual_and_jacobian(&trial, spectrum, target);
            let trial_cost = tr.norm_squared();
            if trial_cost < cost {
                x = trial;
                r = tr;
                j = tj;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    LocalSolution {
        params: x,
        cost,
        iterations,
    }
}

/// Where a fitted target came from when the raw data was not reachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub raw_target: ProbabilityVector,
    pub slack: f64,
    /// Largest componentwise adjustment.
    pub distance_max: f64,
    /// Euclidean length of the adjustment.
    pub distance_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFit {
    pub frame: OrthonormalFrame,
    /// Parameters relative to the eigenbasis of the input state, reduced
    /// into `[0, 2pi)`.
    pub parameters: FrameParameters,
    /// Target actually fitted (after projection, if any).
    pub target: ProbabilityVector,
    /// Sum of squared errors of the returned frame against `target`,
    /// recomputed from the density matrix.
    pub residual: f64,
    pub iterations: usize,
    /// Number of multi-starts that reached the threshold.
    pub converged_starts: usize,
    pub projection: Option<Projection>,
}

/// Eigenbasis (as a frame) and populations of `rho`. A diagonal state keeps
/// the standard basis in its own order.
fn eigenbasis(rho: &DensityMatrix) -> Result<(OrthonormalFrame, Vec<f64>)> {
    let m = rho.matrix();
    let off_diag = (0..m.rows())
        .flat_map(|i| (0..m.cols()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .fold(0.0, f64::max);
    if off_diag <= 1e-15 {
        return Ok((OrthonormalFrame::standard(m.rows()), rho.populations()));
    }
    let (values, vectors) = m.hermitian_eigen();
    Ok((OrthonormalFrame::from_vectors(&vectors)?, values))
}

/// Finds a frame whose outcome probabilities on `rho` equal `target`.
///
/// Targets whose majorization slack against the spectrum of `rho` exceeds
/// `options.tol` are rejected; smaller positive slack is removed by
/// [`project_to_majorized`] before fitting.
pub fn fit_transition(rho: &DensityMatrix, target: &ProbabilityVector, options: &FitOptions) -> Result<TransitionFit> {
    fit_transition_labeled(rho, target, options, "target")
}

fn fit_transition_labeled(
    rho: &DensityMatrix,
    target: &ProbabilityVector,
    options: &FitOptions,
    context: &str,
) -> Result<TransitionFit> {
    if rho.dim() != 3 || target.len() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "frame fitting works on C^3, got state dimension {} and {} targets",
            rho.dim(),
            target.len()
        )));
    }
    if options.starts == 0 {
        return Err(Error::Domain("at least one multi-start is required".into()));
    }
    let (basis, spectrum) = eigenbasis(rho)?;
    let spectrum_pv = ProbabilityVector::new(spectrum.clone())?;
    let slack = majorization_slack(&spectrum_pv, target)?;
    if slack > options.tol {
        return Err(Error::Infeasible {
            context: context.to_string(),
            slack,
            tol: options.tol,
        });
    }
    let (fit_target, projection) = if slack > 0.0 {
        let projected = project_to_majorized(&spectrum_pv, target)?;
        let distance_max = projected.max_abs_diff(target);
        let distance_l2 = projected
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let info = Projection {
            raw_target: target.clone(),
            slack,
            distance_max,
            distance_l2,
        };
        (projected, Some(info))
    } else {
        (target.clone(), None)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let tau = std::f64::consts::TAU;
    let starts: Vec<[f64; 6]> = (0..options.starts)
        .map(|s| {
            if s == 0 {
                [0.0; 6]
            } else {
                std::array::from_fn(|_| rng.random_range(0.0..tau))
            }
        })
        .collect();
    let solutions: Vec<LocalSolution> = starts
        .par_iter()
        .map(|&x0| levenberg_marquardt(x0, &spectrum, fit_target.as_slice(), options))
        .collect();

    let converged: Vec<(FrameParameters, &LocalSolution)> = solutions
        .iter()
        .filter(|s| s.cost <= options.residual_threshold)
        .map(|s| (FrameParameters::from_array(s.params).canonical(), s))
        .collect();
    let Some((params, best)) = converged
        .iter()
        .min_by(|a, b| lexicographic(&a.0.to_array(), &b.0.to_array()))
    else {
        let best_residual = solutions.iter().map(|s| s.cost).fold(f64::INFINITY, f64::min);
        return Err(Error::NonConvergence {
            starts: options.starts,
            best_residual,
        });
    };

    let frame = basis.rotated(&unitary_from_parameters(params))?;
    let achieved = outcome_probabilities(rho, &frame)?;
    let residual = achieved
        .as_slice()
        .iter()
        .zip(fit_target.as_slice())
        .map(|(a, t)| (a - t).powi(2))
        .sum();
    Ok(TransitionFit {
        frame,
        parameters: *params,
        target: fit_target,
        residual,
        iterations: best.iterations,
        converged_starts: converged.len(),
        projection,
    })
}

fn lexicographic(a: &[f64; 6], b: &[f64; 6]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub label: String,
    /// Q1 lives on its own tensor factor of a product state.
    pub isolate_first: bool,
    pub tol: f64,
    /// Index of the first question on the modelled factor (1 when isolated).
    pub first_modelled: usize,
    /// Distribution of the isolated first question, when isolated.
    pub isolated_distribution: Option<ProbabilityVector>,
    /// Initial pure state of the modelled factor is the square-root
    /// embedding of this distribution.
    pub initial_distribution: ProbabilityVector,
    /// One frame per question on the modelled factor, starting with the
    /// standard basis of `first_modelled`.
    pub frames: Vec<OrthonormalFrame>,
    /// One entry per fitted transition (`first_modelled+1 ..`).
    pub transitions: Vec<TransitionFit>,
    /// Outcome probabilities for every question of the chain.
    pub achieved: Vec<ProbabilityVector>,
}

impl FitResult {
    pub fn residuals(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.residual).collect()
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.transitions.iter().map(|t| t.iterations).collect()
    }

    /// Projection applied to question `index` (zero based), if any.
    pub fn projection_for(&self, index: usize) -> Option<&Projection> {
        index
            .checked_sub(self.first_modelled + 1)
            .and_then(|k| self.transitions.get(k))
            .and_then(|t| t.projection.as_ref())
    }
}

/// Fits every question after the first modelled one, feeding each fitted
/// frame's Lüders update into the next fit.
pub fn fit_chain(chain: &SurveyChain, isolate_first: bool, tol: f64, options: &FitOptions) -> Result<FitResult> {
    if chain.questions.iter().any(|q| q.distribution.len() != 3) {
        return Err(Error::DimensionMismatch("frame fitting needs three answers per question".into()));
    }
    let first = usize::from(isolate_first);
    if first >= chain.len() {
        return Err(Error::Domain("chain has no question to model after isolating Q1".into()));
    }
    let options = FitOptions { tol, ..*options };
    let mut achieved = Vec::with_capacity(chain.len());
    let isolated_distribution = if isolate_first {
        let factor = square_root_embed(chain.distribution(0)).to_density();
        achieved.push(outcome_probabilities(&factor, &OrthonormalFrame::standard(3))?);
        Some(chain.distribution(0).clone())
    } else {
        None
    };

    let initial = chain.distribution(first).clone();
    let psi = square_root_embed(&initial).to_density();
    let start_frame = OrthonormalFrame::standard(3);
    achieved.push(outcome_probabilities(&psi, &start_frame)?);
    let mut state = lueders_update_frame(&psi, &start_frame)?;
    let mut frames = vec![start_frame];
    let mut transitions = Vec::new();

    for next in first + 1..chain.len() {
        let context = format!("Q{}->Q{}", next, next + 1);
        let fit = fit_transition_labeled(&state, chain.distribution(next), &options, &context)?;
        achieved.push(outcome_probabilities(&state, &fit.frame)?);
        state = lueders_update_frame(&state, &fit.frame)?;
        frames.push(fit.frame.clone());
        transitions.push(fit);
    }

    Ok(FitResult {
        label: chain.label.clone(),
        isolate_first,
        tol,
        first_modelled: first,
        isolated_distribution,
        initial_distribution: initial,
        frames,
        transitions,
        achieved,
    })
}

/// Recomputes every question's statistics from scratch on the full product
/// space (`C^3 ⊗ C^3` when Q1 is isolated), measuring the embedded
/// projectors of each frame in turn.
pub fn replay(fit: &FitResult, chain: &SurveyChain) -> Result<Vec<ProbabilityVector>> {
    if chain.len() != fit.first_modelled + fit.frames.len() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} frames for a chain of {} questions",
            fit.frames.len(),
            chain.len()
        )));
    }
    let modelled = square_root_embed(chain.distribution(fit.first_modelled));
    let (mut state, dims, factor, mut out) = if fit.isolate_first {
        let isolated = square_root_embed(chain.distribution(0));
        let psi = crate::hilbert::kron_vec(isolated.amplitudes(), modelled.amplitudes());
        let rho = DensityMatrix::new(ComplexMatrix::projector(&psi))?;
        let dims = vec![3, 3];
        let first = measure(&rho, &OrthonormalFrame::standard(3), 0, &dims)?;
        let after = crate::state::lueders_update(&rho, &embed_local(&OrthonormalFrame::standard(3), 0, &dims)?)?;
        (after, dims, 1, vec![first])
    } else {
        (modelled.to_density(), vec![3], 0, Vec::new())
    };
    for frame in &fit.frames {
        out.push(measure(&state, frame, factor, &dims)?);
        state = crate::state::lueders_update(&state, &embed_local(frame, factor, &dims)?)?;
    }
    Ok(out)
}

fn measure(state: &DensityMatrix, frame: &OrthonormalFrame, factor: usize, dims: &[usize]) -> Result<ProbabilityVector> {
    let povm = Povm::new(embed_local(frame, factor, dims)?)?;
    povm_probabilities(state, &povm)
}
