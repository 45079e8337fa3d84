use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the total from 1.
pub const SUM_TOL: f64 = 1e-9;

/// Entries this far below zero are rounding noise and get clamped.
const NEG_NOISE: f64 = 1e-12;

/// Discrete answer distribution of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty distribution".into()));
        }
        if let Some(bad) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < -NEG_NOISE || **p > 1.0 + NEG_NOISE)
        {
            return Err(Error::InvalidProbability(format!(
                "entry {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect()))
    }

    /// Percentages (0-100) divided by 100, then rescaled to sum to exactly 1
    /// when the published total is off by at most one point.
    pub fn from_percentages(percents: &[f64]) -> Result<Self> {
        if let Some(bad) = percents.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 100.0) {
            return Err(Error::InvalidProbability(format!(
                "percentage {bad} outside [0, 100]"
            )));
        }
        let total: f64 = percents.iter().sum();
        if !(99.0..=101.0).contains(&total) {
            return Err(Error::InvalidProbability(format!(
                "percentages sum to {total}, outside [99, 101]"
            )));
        }
        let scaled: Vec<f64> = percents.iter().map(|p| p / 100.0).collect();
        let sum: f64 = scaled.iter().sum();
        Self::new(scaled.into_iter().map(|p| p / sum).collect())
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Entries in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }
}

impl Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}
