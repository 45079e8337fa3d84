mod common;

use qcog::error::Error;
use qcog::feasibility::{majorization_check, majorization_slack};
use qcog::fit::{fit_chain, objective, project_to_majorized, replay, FitOptions, FitResult};
use qcog::hilbert::FrameParameters;
use qcog::state::ProbabilityVector;
use qcog::survey::fixtures;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table1_fit() -> FitResult {
    fit_chain(&fixtures::table1(), true, 0.0, &FitOptions::default()).unwrap()
}

/// Spectrum of the state each transition was fitted against, in the order
/// the fitted parameters are expressed in: the diagonal first state keeps
/// the standard basis, later states use their eigenbasis in descending order.
fn spectra(fit: &FitResult) -> Vec<Vec<f64>> {
    let mut out = vec![fit.initial_distribution.to_vec()];
    for t in &fit.transitions[..fit.transitions.len() - 1] {
        out.push(t.target.sorted_desc());
    }
    out
}

#[test]
fn table1_replays_within_tolerance() {
    let chain = fixtures::table1();
    let fit = table1_fit();
    let replayed = replay(&fit, &chain).unwrap();
    assert_eq!(replayed.len(), 5);
    for (i, r) in replayed.iter().enumerate() {
        assert!(r.max_abs_diff(chain.distribution(i)) < 1e-6, "Q{}: {:?}", i + 1, r);
        assert!(fit.achieved[i].max_abs_diff(r) < 1e-12);
    }
    assert!(fit.residuals().iter().all(|r| *r < 1e-18));
    assert_eq!(fit.frames.len(), 4);
    for f in &fit.frames {
        assert!(f.gram_deviation() < 1e-12);
    }
}

#[test]
fn achieved_distributions_respect_majorization() {
    let fit = table1_fit();
    for w in fit.achieved[1..].windows(2) {
        assert!(majorization_check(&w[0], &w[1], 0.0).unwrap().feasible, "{:?} -> {:?}", w[0], w[1]);
    }
    let t2 = fit_chain(&fixtures::table2(), true, 0.07, &FitOptions::default()).unwrap();
    for w in t2.achieved[1..].windows(2) {
        assert!(majorization_check(&w[0], &w[1], 0.0).unwrap().feasible, "{:?} -> {:?}", w[0], w[1]);
    }
}

#[test]
fn table2_projections_are_reported() {
    let fit = fit_chain(&fixtures::table2(), true, 0.07, &FitOptions::default()).unwrap();
    let q3 = fit.projection_for(2).expect("Q3 projected");
    assert_eq!(q3.raw_target.as_slice(), &[0.79, 0.06, 0.15]);
    assert!((q3.distance_max - 0.06).abs() < 1e-12);
    assert!((q3.slack - 0.06).abs() < 1e-12);
    let target = &fit.transitions[0].target;
    assert!(target.max_abs_diff(&ProbabilityVector::new(vec![0.73, 0.09, 0.18]).unwrap()) < 1e-12);
    assert!(fit.projection_for(4).is_none());
    let last = fit.achieved.last().unwrap();
    assert!(last.max_abs_diff(fixtures::table2().distribution(4)) < 1e-6);
}

#[test]
fn tighter_tolerance_rejects_table2() {
    let err = fit_chain(&fixtures::table2(), true, 0.05, &FitOptions::default()).unwrap_err();
    match err {
        Error::Infeasible { context, slack, tol } => {
            assert_eq!(context, "Q2->Q3");
            assert!((slack - 0.06).abs() < 1e-12);
            assert_eq!(tol, 0.05);
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn first_transition_needs_isolation() {
    let err = fit_chain(&fixtures::table1(), false, 0.0, &FitOptions::default()).unwrap_err();
    assert!(matches!(&err, Error::Infeasible { context, .. } if context == "Q1->Q2"), "{err}");
}

#[test]
fn solutions_are_stationary() {
    let fit = table1_fit();
    let h = 1e-6;
    for (t, spectrum) in fit.transitions.iter().zip(spectra(&fit)) {
        let x = t.parameters.to_array();
        let grad_sq: f64 = (0..6)
            .map(|i| {
                let (mut up, mut down) = (x, x);
                up[i] += h;
                down[i] -= h;
                let f = |p: [f64; 6]| objective(&FrameParameters::from_array(p), &spectrum, t.target.as_slice());
                ((f(up) - f(down)) / (2.0 * h)).powi(2)
            })
            .sum();
        assert!(grad_sq.sqrt() < 1e-6, "gradient norm {}", grad_sq.sqrt());
    }
}

#[test]
fn redundant_phases_drop_out() {
    let fit = table1_fit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (t, spectrum) in fit.transitions.iter().zip(spectra(&fit)) {
        let base = objective(&t.parameters, &spectrum, t.target.as_slice());
        for _ in 0..50 {
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let mut x = t.parameters.to_array();
            x[3] += a;
            x[4] += a + b;
            x[5] += b;
            let moved = objective(&FrameParameters::from_array(x), &spectrum, t.target.as_slice());
            assert!((moved - base).abs() < 1e-12);
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let a = serde_json::to_string(&table1_fit()).unwrap();
    let b = serde_json::to_string(&table1_fit()).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| serde_json::to_string(&table1_fit()).unwrap());
    assert_eq!(a, c);
}

#[test]
fn fit_result_json_shape() {
    let v: serde_json::Value = serde_json::to_value(table1_fit()).unwrap();
    let frame = &v["frames"][1];
    assert_eq!(frame["rows"], 3);
    let entries = frame["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 9);
    assert!(entries.iter().all(|e| e.as_array().map(|p| p.len()) == Some(2)));
    assert_eq!(v["transitions"].as_array().unwrap().len(), 3);
}

/// Active-set oracle: in the target's descending order the projection is
/// the equality-constrained solution for some set of tight prefix sums, so
/// enumerate them all and keep the nearest feasible one.
fn projection_oracle(current: &[f64], target: &[f64]) -> Vec<f64> {
    let n = target.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]));
    let mut cs = current.to_vec();
    cs.sort_by(|a, b| b.total_cmp(a));
    let t: Vec<f64> = order.iter().map(|&i| target[i]).collect();
    let cur = ProbabilityVector::new(current.to_vec()).unwrap();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts: Vec<usize> = (1..n).filter(|k| mask & (1 << (k - 1)) != 0).collect();
        cuts.push(n);
        let mut x = vec![0.0; n];
        let mut start = 0;
        for &end in &cuts {
            let want: f64 = cs[start..end].iter().sum();
            let have: f64 = t[start..end].iter().sum();
            let shift = (want - have) / (end - start) as f64;
            for k in start..end {
                x[k] = t[k] + shift;
            }
            start = end;
        }
        let mut unsorted = vec![0.0; n];
        for (k, &i) in order.iter().enumerate() {
            unsorted[i] = x[k];
        }
        if unsorted.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let Ok(cand) = ProbabilityVector::new(unsorted.clone()) else { continue };
        if majorization_slack(&cur, &cand).unwrap() > 1e-12 {
            continue;
        }
        let d: f64 = unsorted.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, unsorted));
        }
    }
    best.expect("the current distribution itself is feasible").1
}

#[test]
fn projection_matches_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..2000 {
        let n = 3 + trial % 3;
        let current = common::random_probability(n, &mut rng);
        let target = common::random_probability(n, &mut rng);
        let got = project_to_majorized(
            &ProbabilityVector::new(current.clone()).unwrap(),
            &ProbabilityVector::new(target.clone()).unwrap(),
        )
        .unwrap();
        let want = projection_oracle(&current, &target);
        let diff = got.as_slice().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "current {current:?} target {target:?}: {got:?} vs {want:?}");
    }
}

#[test]
fn feasible_targets_project_to_themselves() {
    let c = ProbabilityVector::new(vec![0.81, 0.04, 0.15]).unwrap();
    let t = ProbabilityVector::new(vec![0.72, 0.13, 0.15]).unwrap();
    assert!(project_to_majorized(&c, &t).unwrap().max_abs_diff(&t) < 1e-15);
}
