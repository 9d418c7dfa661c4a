//! Probability vectors over a fixed, positional set of outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

/// Floor applied to every probability so that no outcome is ever assigned
/// exactly zero (or, by renormalization, exactly one).
pub const EPSILON_CLAMP: f64 = 1e-9;

/// Tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A strictly positive probability vector summing to one.
///
/// For binary markets index 0 is "the event occurs" and index 1 is "it does not".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilitySimplex(Vec<f64>);

impl ProbabilitySimplex {
    /// Clamp every entry to at least [`EPSILON_CLAMP`] and renormalize.
    pub fn new(raw: &[f64]) -> Result<Self> {
        validate_simplex(raw)
    }

    /// Two-outcome vector `[p, 1 - p]`.
    pub fn binary(p: f64) -> Result<Self> {
        validate_simplex(&[p, 1.0 - p])
    }

    /// Wrap a vector already known to be positive and normalized.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Display odds `(1 - m_i) / m_i` for every outcome.
    pub fn odds(&self) -> Vec<f64> {
        self.0.iter().map(|&m| (1.0 - m) / m).collect()
    }
}

impl AsRef<[f64]> for ProbabilitySimplex {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ProbabilitySimplex {
    type Error = MarketError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        validate_simplex(&v)
    }
}

impl From<ProbabilitySimplex> for Vec<f64> {
    fn from(s: ProbabilitySimplex) -> Self {
        s.0
    }
}

/// Validate raw nonnegative weights and turn them into a [`ProbabilitySimplex`].
///
/// Each entry becomes `max(raw_i, EPSILON_CLAMP)` and the vector is divided by
/// its sum. Rejects fewer than two entries, negative or non-finite entries,
/// and an all-zero vector.
pub fn validate_simplex(raw: &[f64]) -> Result<ProbabilitySimplex> {
    if raw.len() < 2 {
        return Err(MarketError::TooFewOutcomes(raw.len()));
    }
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(MarketError::InvalidProbability { index, value });
        }
    }
    if raw.iter().all(|&v| v == 0.0) {
        return Err(MarketError::AllZero);
    }
    let clamped: Vec<f64> = raw.iter().map(|&v| v.max(EPSILON_CLAMP)).collect();
    let total: f64 = clamped.iter().sum();
    let mut probs: Vec<f64> = clamped.iter().map(|&v| v / total).collect();
    // Renormalizing can pull an entry a hair under the floor when another
    // entry dominates; one more pass settles it.
    if probs.iter().any(|&p| p < EPSILON_CLAMP) {
        for p in probs.iter_mut() {
            *p = p.max(EPSILON_CLAMP);
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(ProbabilitySimplex(probs))
}

/// Keep a binary event probability inside `[EPSILON_CLAMP, 1 - EPSILON_CLAMP]`.
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP)
}
