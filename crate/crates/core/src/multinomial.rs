//! Kelly market over any number of mutually exclusive outcomes.
//!
//! Positions are held as ending wealth per outcome (see [`PositionMatrix`]).
//! With `p` the `n × m` matrix of estimates (one column per bettor) and `w`
//! the positions, the clearing probabilities `m` satisfy `(p wᵀ) m = m` and the
//! credibilities `c = wᵀ m` satisfy `(wᵀ p) c = c`. Both matrices are
//! left-stochastic and strictly positive once estimates are clamped, so the
//! eigenvalue-1 eigenvector is unique and power iteration finds it.

use nalgebra::{DMatrix, DVector};

use crate::error::{MarketError, Result};
use crate::position::{MarketState, PositionMatrix, WEALTH_TOLERANCE};
use crate::simplex::ProbabilitySimplex;

/// Stop once successive iterates differ by less than this in the max norm.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 10_000;
/// Largest acceptable `‖M m − m‖∞` after clearing.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Market-clearing probabilities together with the matrices they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingResult {
    pub market_probs: ProbabilitySimplex,
    /// Marked-to-market value of each bettor's positions, `wᵀ m`.
    pub credibilities: Vec<f64>,
    /// `M = p wᵀ`; entry `(i, j)` reads as the chance of `j` given `i` occurred.
    pub conditional_matrix: DMatrix<f64>,
    /// `S = wᵀ p`; entry `(i, j)` is bettor `i`'s valuation of bettor `j`'s portfolio.
    pub self_eval_matrix: DMatrix<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl ClearingResult {
    /// Display odds `(1 − m_i) / m_i`.
    pub fn market_odds(&self) -> Vec<f64> {
        self.market_probs.odds()
    }
}

/// Eigenvector with eigenvalue 1 of a positive left-stochastic matrix,
/// normalized to sum to one.
fn stationary_vector(a: &DMatrix<f64>) -> Result<(DVector<f64>, usize)> {
    let k = a.nrows();
    let mut x = DVector::from_element(k, 1.0 / k as f64);
    let mut diff = f64::INFINITY;
    for it in 1..=MAX_POWER_ITERATIONS {
        let mut next = a * &x;
        let total = next.sum();
        next /= total;
        diff = (&next - &x).amax();
        x = next;
        if diff < POWER_ITERATION_TOLERANCE {
            return Ok((x, it));
        }
    }
    Err(MarketError::NoConvergence { iterations: MAX_POWER_ITERATIONS, residual: diff })
}

/// Find the market-clearing probabilities for the given positions and estimates.
///
/// Solves whichever of the `n × n` or `m × m` eigenproblems is smaller and
/// recovers the other vector from `c = wᵀ m` or `m = p c`.
pub fn clear_market(state: &MarketState) -> Result<ClearingResult> {
    let w = state.positions().matrix();
    let p = state.estimates();
    let (n, bettors) = (w.nrows(), w.ncols());
    if n < 2 {
        return Err(MarketError::TooFewOutcomes(n));
    }
    if p.nrows() != n || p.ncols() != bettors {
        return Err(MarketError::DimensionMismatch("estimates and positions differ in shape".into()));
    }

    let conditional = p * w.transpose();
    let self_eval = w.transpose() * p;

    let (m, c, iterations) = if n <= bettors {
        let (m, it) = stationary_vector(&conditional)?;
        let c = w.transpose() * &m;
        (m, c, it)
    } else {
        let (c, it) = stationary_vector(&self_eval)?;
        let mut m = p * &c;
        let total = m.sum();
        m /= total;
        (m, c, it)
    };

    let residual = (&conditional * &m - &m).amax();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(MarketError::NoConvergence { iterations, residual });
    }
    if m.iter().any(|&v| !(v > 0.0)) {
        return Err(MarketError::InvariantViolation("non-positive market probability".into()));
    }

    Ok(ClearingResult {
        market_probs: ProbabilitySimplex::from_normalized(m.iter().copied().collect()),
        credibilities: c.iter().copied().collect(),
        conditional_matrix: conditional,
        self_eval_matrix: self_eval,
        iterations,
        residual,
    })
}

fn check_column(positions: &[f64], estimate: &ProbabilitySimplex, market_probs: &ProbabilitySimplex) -> Result<()> {
    let n = positions.len();
    if estimate.len() != n || market_probs.len() != n {
        return Err(MarketError::DimensionMismatch(format!(
            "position has {n} outcomes, estimate {}, market {}",
            estimate.len(),
            market_probs.len()
        )));
    }
    if market_probs.as_slice().iter().any(|&m| !(m > 0.0)) {
        return Err(MarketError::InvalidInput("market probability must be positive".into()));
    }
    Ok(())
}

/// Expected value of a position under the market probabilities.
pub fn marked_to_market(positions: &[f64], market_probs: &ProbabilitySimplex) -> f64 {
    positions.iter().zip(market_probs.as_slice()).map(|(w, m)| w * m).sum()
}

/// Kelly-optimal ending wealth per outcome: `w'_i = (p_i / m_i) Σ_k m_k w_k`.
///
/// Trades are self-funding, so the marked-to-market value is unchanged.
pub fn rebalance(positions: &[f64], estimate: &ProbabilitySimplex, market_probs: &ProbabilitySimplex) -> Result<Vec<f64>> {
    check_column(positions, estimate, market_probs)?;
    let value = marked_to_market(positions, market_probs);
    Ok(estimate
        .as_slice()
        .iter()
        .zip(market_probs.as_slice())
        .map(|(p, m)| p / m * value)
        .collect())
}

/// Win shares bought (positive) or sold (negative) per outcome in a rebalance.
pub fn trade_deltas(positions: &[f64], estimate: &ProbabilitySimplex, market_probs: &ProbabilitySimplex) -> Result<Vec<f64>> {
    let target = rebalance(positions, estimate, market_probs)?;
    Ok(target.iter().zip(positions).map(|(t, w)| t - w).collect())
}

/// One round: clear at the new estimates and move every bettor to their
/// Kelly position.
pub fn step_market(state: &MarketState, estimates: &[ProbabilitySimplex]) -> Result<(MarketState, ClearingResult)> {
    let next_estimates = crate::position::estimate_matrix(state.outcomes(), estimates)?;
    if next_estimates.ncols() != state.bettors() {
        return Err(MarketError::DimensionMismatch(format!(
            "{} estimates for {} bettors",
            next_estimates.ncols(),
            state.bettors()
        )));
    }
    let pending = MarketState::from_parts(state.positions().clone(), next_estimates, state.step_index());
    let clearing = clear_market(&pending)?;

    let w = pending.positions().matrix();
    let p = pending.estimates();
    let m = clearing.market_probs.as_slice();
    let mut next = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| p[(i, j)] / m[i] * clearing.credibilities[j]);

    // Rows sum to (p c)_i / m_i, which is 1 up to the eigenvector residual;
    // project back onto the constraint so long runs do not drift.
    for mut row in next.row_iter_mut() {
        let sum = row.sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MarketError::InvariantViolation(format!("position row sums to {sum} after rebalance")));
        }
        row /= sum;
    }
    let cred_sum: f64 = clearing.credibilities.iter().sum();
    if (cred_sum - 1.0).abs() > WEALTH_TOLERANCE {
        return Err(MarketError::InvariantViolation(format!("credibilities sum to {cred_sum}")));
    }

    let positions = PositionMatrix::new(next)?;
    let step = pending.step_index() + 1;
    Ok((MarketState::from_parts(positions, pending.estimates().clone(), step), clearing))
}

/// Wealth of every bettor once outcome `outcome_index` is realized.
pub fn settle_multinomial(state: &MarketState, outcome_index: usize) -> Result<Vec<f64>> {
    if outcome_index >= state.outcomes() {
        return Err(MarketError::OutcomeOutOfRange { index: outcome_index, outcomes: state.outcomes() });
    }
    Ok(state.positions().row(outcome_index))
}

/// Posterior credibility of a model after observing `outcome_index`, read off
/// the rebalanced position: prior `Σ m_i w_i`, likelihood `p_B`, evidence `m_B`.
pub fn bayes_posterior(
    prior_positions: &[f64],
    estimate: &ProbabilitySimplex,
    market_probs: &ProbabilitySimplex,
    outcome_index: usize,
) -> Result<f64> {
    if outcome_index >= prior_positions.len() {
        return Err(MarketError::OutcomeOutOfRange { index: outcome_index, outcomes: prior_positions.len() });
    }
    Ok(rebalance(prior_positions, estimate, market_probs)?[outcome_index])
}
