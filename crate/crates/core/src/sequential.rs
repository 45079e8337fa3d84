//! Two binary questions asked in sequence.
//!
//! The state `|psi> = sqrt(p)|F> + sqrt(1-p)|~F> = sqrt(q)|B> + sqrt(1-q)|~B>`
//! is measured first in the F frame (answer discarded) and then in the B
//! frame. `P^F(B)` is the resulting probability of answering B.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ComplexMatrix, OrthonormalFrame};
use crate::state::{
    lueders_update_frame, outcome_probabilities, square_root_embed_labeled, DensityMatrix,
    ProbabilityVector,
};

/// One cell of the (p, q) interference scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceResult {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub p_f_b: f64,
    pub delta: f64,
    /// `P(F) > P^F(B) > P(B)`.
    pub in_region: bool,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} is not in [0, 1]")));
    }
    Ok(())
}

/// `|<B|F>|^2 = (sqrt(pq) + sqrt((1-p)(1-q)))^2`.
pub fn overlap_alpha(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let root = (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt();
    Ok((root * root).min(1.0))
}

/// Closed form for `P^F(B)`.
pub fn sequential_probability(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let cross = (p * q * (1.0 - p) * (1.0 - q)).sqrt();
    Ok(2.0 * p * (p - 1.0) * (2.0 * q - 1.0) + q + 2.0 * (2.0 * p - 1.0) * cross)
}

fn real_frame(first: &[Complex64]) -> OrthonormalFrame {
    let (c, s) = (first[0].re, first[1].re);
    let m = ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]]);
    OrthonormalFrame::from_unitary(m).expect("rotation is orthogonal")
}

/// The B frame in F coordinates: the rotation that carries the B-basis
/// components `(sqrt q, sqrt(1-q))` of `|psi>` onto its F-basis components
/// `(sqrt p, sqrt(1-p))`.
pub fn question_b_frame(p: f64, q: f64) -> Result<OrthonormalFrame> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let in_f = square_root_embed_labeled(&ProbabilityVector::new(vec![p, 1.0 - p])?, "F");
    let in_b = square_root_embed_labeled(&ProbabilityVector::new(vec![q, 1.0 - q])?, "B");
    let w = real_frame(in_f.amplitudes());
    let s = real_frame(in_b.amplitudes());
    OrthonormalFrame::from_unitary(w.as_unitary() * &s.as_unitary().adjoint())
}

/// Answer distribution of B after F has been asked, computed by
/// embedding, Lüders update and projection.
pub fn sequential_distribution_pipeline(p: f64, q: f64) -> Result<ProbabilityVector> {
    let psi = square_root_embed_labeled(&ProbabilityVector::new(vec![p, 1.0 - p])?, "F");
    let after_f = lueders_update_frame(&psi.to_density(), &OrthonormalFrame::standard(2))?;
    outcome_probabilities(&after_f, &question_b_frame(p, q)?)
}

/// `P^F(B)` from the matrix pipeline.
pub fn sequential_probability_pipeline(p: f64, q: f64) -> Result<f64> {
    Ok(sequential_distribution_pipeline(p, q)?[0])
}

pub fn interference_at(p: f64, q: f64) -> Result<InterferenceResult> {
    let alpha = overlap_alpha(p, q)?;
    let p_f_b = sequential_probability(p, q)?;
    Ok(InterferenceResult {
        p,
        q,
        alpha,
        p_f_b,
        delta: p_f_b - q,
        in_region: p > p_f_b && p_f_b > q,
    })
}

/// `grid_n x grid_n` cell-centred grid over the open unit square, `p` major.
pub fn interference_region_scan(grid_n: usize) -> Result<Vec<InterferenceResult>> {
    if grid_n < 2 {
        return Err(Error::Domain(format!("grid size {grid_n} must be at least 2")));
    }
    let centre = |i: usize| (i as f64 + 0.5) / grid_n as f64;
    (0..grid_n * grid_n)
        .into_par_iter()
        .map(|k| interference_at(centre(k / grid_n), centre(k % grid_n)))
        .collect()
}

pub const SCAN_CSV_HEADER: &str = "p,q,alpha,p_f_b,delta,in_region";

/// Header plus one LF-terminated row per cell.
pub fn write_scan_csv<W: Write>(cells: &[InterferenceResult], mut out: W) -> io::Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.p, c.q, c.alpha, c.p_f_b, c.delta, c.in_region
        )?;
    }
    Ok(())
}

/// Spin-1/2 order effect: start in the `sigma_x = +1` eigenstate and return
/// `P(X = up)` without and with an intervening `sigma_y` measurement.
pub fn spin_order_demo() -> (f64, f64) {
    let (x_frame, y_frame) = pauli_frames();
    run_spin_demo(&x_frame, &y_frame)
}

/// Same experiment with the roles of the two axes exchanged.
pub fn spin_order_demo_swapped() -> (f64, f64) {
    let (x_frame, y_frame) = pauli_frames();
    run_spin_demo(&y_frame, &x_frame)
}

fn pauli_frames() -> (OrthonormalFrame, OrthonormalFrame) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    let x = OrthonormalFrame::from_vectors(&[vec![r(h), r(h)], vec![r(h), r(-h)]]).expect("x basis");
    let y = OrthonormalFrame::from_vectors(&[vec![r(h), i(h)], vec![r(h), i(-h)]]).expect("y basis");
    (x, y)
}

fn run_spin_demo(measured: &OrthonormalFrame, intervening: &OrthonormalFrame) -> (f64, f64) {
    let up = DensityMatrix::from_matrix_unchecked(ComplexMatrix::projector(&measured.vector(0)));
    let direct = outcome_probabilities(&up, measured).expect("matching dims")[0];
    let disturbed = lueders_update_frame(&up, intervening).expect("valid frame");
    let after = outcome_probabilities(&disturbed, measured).expect("matching dims")[0];
    (direct, after)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_cases() {
        for &p in &[0.0, 0.1, 0.37, 0.5, 1.0] {
            assert!((overlap_alpha(p, p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(overlap_alpha(1.0, 0.0).unwrap().abs() < 1e-15);
        assert!(overlap_alpha(1.2, 0.0).is_err());
        assert!(overlap_alpha(0.5, -0.1).is_err());
    }

    #[test]
    fn alpha_matches_vector_overlap() {
        // |B> and |F> written out as 2-vectors in the F basis
        let (p, q) = (0.8f64, 0.3f64);
        let frame = question_b_frame(p, q).unwrap();
        let b = frame.vector(0);
        let alpha_numeric = b[0].norm_sqr();
        assert!((alpha_numeric - 0.746_606_055_596_467_2).abs() < 1e-12);
        assert!((overlap_alpha(p, q).unwrap() - alpha_numeric).abs() < 1e-12);
    }

    #[test]
    fn b_frame_reproduces_psi_components() {
        let (p, q) = (0.65, 0.2);
        let frame = question_b_frame(p, q).unwrap();
        let psi = [Complex64::new(p.sqrt(), 0.0), Complex64::new((1.0 - p).sqrt(), 0.0)];
        let b0 = crate::hilbert::inner(&frame.vector(0), &psi);
        let b1 = crate::hilbert::inner(&frame.vector(1), &psi);
        assert!((b0.re - q.sqrt()).abs() < 1e-14 && b0.im.abs() < 1e-15);
        assert!((b1.re - (1.0 - q).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sequential_reference_value() {
        // <B|rho_F|B> = p*alpha + (1-p)*(1-alpha), alpha from the vector oracle above
        let alpha: f64 = 0.746_606_055_596_467_2;
        let oracle = 0.8 * alpha + 0.2 * (1.0 - alpha);
        assert!((oracle - 0.647_963_633_357_880_3).abs() < 1e-12);
        assert!((sequential_probability(0.8, 0.3).unwrap() - oracle).abs() < 1e-12);
        assert!((sequential_probability_pipeline(0.8, 0.3).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn equality_lines() {
        for &q in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((sequential_probability(q, q).unwrap() - q).abs() < 1e-15);
            assert!((sequential_probability(0.0, q).unwrap() - q).abs() < 1e-15);
            assert!((sequential_probability(1.0, q).unwrap() - q).abs() < 1e-15);
        }
    }

    #[test]
    fn scan_rejects_small_grid() {
        assert!(interference_region_scan(1).is_err());
        assert_eq!(interference_region_scan(3).unwrap().len(), 9);
    }

    #[test]
    fn csv_format() {
        let cells = interference_region_scan(2).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], SCAN_CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "");
        assert!(lines[1].starts_with("0.25,0.25,1,0.25,0,false"));
    }

    #[test]
    fn spin_demo_values() {
        let (a, b) = spin_order_demo();
        assert!((a - 1.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        let (a, b) = spin_order_demo_swapped();
        assert!((a - 1.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
    }
}
