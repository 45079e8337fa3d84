mod common;

use num_complex::Complex64;
use qcog::hilbert::{ComplexMatrix, OrthonormalFrame};
use qcog::nosignal::{
    apply_series, factor_marginal, random_frame, random_pure_state, random_series, FACTOR_DIMS,
};
use qcog::state::{
    lueders_update, lueders_update_frame, outcome_probabilities, povm_probabilities, DensityMatrix,
    Povm,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random unitary on C^m from the eigenvectors of a random Hermitian matrix.
fn random_unitary(m: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = common::random_mixed_state(m, m, rng);
    let (_, vectors) = g.matrix().hermitian_eigen();
    ComplexMatrix::from_fn(m, m, |i, j| vectors[j][i])
}

#[test]
fn naimark_povm_matches_dilation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let w = random_unitary(6, &mut rng);
        // isometry C^3 -> C^6 from the first three columns
        let v = ComplexMatrix::from_fn(6, 3, |i, j| w[(i, j)]);
        let effects: Vec<ComplexMatrix> = (0..6)
            .map(|k| {
                let row = ComplexMatrix::from_fn(1, 3, |_, j| v[(k, j)]);
                &row.adjoint() * &row
            })
            .collect();
        let povm = Povm::new(effects).unwrap();
        let rho = common::random_mixed_state(3, 2, &mut rng);
        let probs = povm_probabilities(&rho, &povm).unwrap();
        let dilated = &(&v * rho.matrix()) * &v.adjoint();
        for (k, p) in probs.as_slice().iter().enumerate() {
            assert!((0.0..=1.0).contains(p));
            assert!((p - dilated[(k, k)].re).abs() < 1e-12);
        }
        assert!((probs.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn projective_povm_agrees_with_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let frame = random_frame(&mut rng);
        let rho = common::random_mixed_state(3, 3, &mut rng);
        let a = outcome_probabilities(&rho, &frame).unwrap();
        let b = povm_probabilities(&rho, &Povm::from_frame(&frame)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }
}

#[test]
fn non_povm_is_rejected() {
    let half = ComplexMatrix::from_diagonal(&[0.5, 0.5, 0.5]);
    assert!(Povm::new(vec![half.clone(), half.clone(), half]).is_err());
    let neg = ComplexMatrix::from_diagonal(&[1.5, 1.0, 1.0]);
    let comp = ComplexMatrix::from_diagonal(&[-0.5, 0.0, 0.0]);
    assert!(Povm::new(vec![neg, comp]).is_err());
}

#[test]
fn repeated_question_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let frame = random_frame(&mut rng);
        let rho = common::random_mixed_state(3, 3, &mut rng);
        let once = lueders_update_frame(&rho, &frame).unwrap();
        let twice = lueders_update_frame(&once, &frame).unwrap();
        assert!(once.matrix().max_abs_diff(twice.matrix()) < 1e-14);
        let probs = outcome_probabilities(&once, &frame).unwrap();
        assert!(probs.max_abs_diff(&outcome_probabilities(&rho, &frame).unwrap()) < 1e-14);
    }
}

#[test]
fn frame_and_projector_updates_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let frame = random_frame(&mut rng);
    let rho = common::random_mixed_state(3, 2, &mut rng);
    let a = lueders_update_frame(&rho, &frame).unwrap();
    let b = lueders_update(&rho, &frame.projectors()).unwrap();
    assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
}

#[test]
fn series_keeps_states_valid() {
    let dim: usize = FACTOR_DIMS.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let state = random_pure_state(dim, &mut rng).to_density();
    let series = random_series(6, &mut rng);
    let mut rho = state.clone();
    for step in series.steps() {
        let one = qcog::nosignal::LocalSeries::new(vec![step.clone()]).unwrap();
        rho = apply_series(&rho, &one).unwrap();
        DensityMatrix::validate(rho.matrix(), 1e-10).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }
    let full = apply_series(&state, &series).unwrap();
    assert!(full.matrix().max_abs_diff(rho.matrix()) < 1e-13);
}

#[test]
fn untouched_factors_of_product_states_are_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let factors: Vec<Vec<Complex64>> = (0..5).map(|_| random_pure_state(3, &mut rng).amplitudes().to_vec()).collect();
    let psi = factors.iter().skip(1).fold(factors[0].clone(), |acc, f| qcog::hilbert::kron_vec(&acc, f));
    let state = DensityMatrix::new(ComplexMatrix::projector(&psi)).unwrap();
    let series = qcog::nosignal::LocalSeries::new(vec![
        (0, random_frame(&mut rng)),
        (2, random_frame(&mut rng)),
        (0, OrthonormalFrame::standard(3)),
    ])
    .unwrap();
    let after = apply_series(&state, &series).unwrap();
    for factor in [1, 3, 4] {
        let before = factor_marginal(&state, factor, &FACTOR_DIMS).unwrap();
        let now = factor_marginal(&after, factor, &FACTOR_DIMS).unwrap();
        assert!(before.max_abs_diff(&now) < 1e-13, "factor {factor}");
    }
}
