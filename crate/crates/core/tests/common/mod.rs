#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use num_complex::Complex64;
use qcog::hilbert::ComplexMatrix;
use qcog::state::DensityMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn qcog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcog"))
        .args(args)
        .env_remove("QCOG_SEED")
        .output()
        .expect("qcog binary runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}):\n{}", String::from_utf8_lossy(&out.stdout))
    })
}

/// Ginibre mixed state `G G^† / tr` of the given rank.
pub fn random_mixed_state(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let rho = m.scale(Complex64::new(1.0 / tr, 0.0));
    // symmetrize away rounding so validation sees an exactly Hermitian matrix
    let herm = ComplexMatrix::from_fn(dim, dim, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    DensityMatrix::new(herm).expect("Ginibre state is valid")
}

pub fn random_probability(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}
