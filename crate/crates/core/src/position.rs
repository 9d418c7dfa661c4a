//! Bettor positions in the two equivalent forms: bankroll plus signed win
//! shares (binary markets), and ending wealth per outcome (any market).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::simplex::ProbabilitySimplex;

/// Tolerance for the wealth normalization constraints (bankrolls sum to 1,
/// win shares sum to 0, position rows sum to 1).
pub const WEALTH_TOLERANCE: f64 = 1e-9;

/// How far below zero a computed wealth figure may drift from rounding
/// before it counts as insolvency.
pub const SOLVENCY_TOLERANCE: f64 = 1e-12;

/// One bettor in a two-outcome market.
///
/// `win_shares` is the money received if the event occurs; negative when the
/// bettor has acted as bookmaker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryBettorState {
    pub bankroll: f64,
    pub win_shares: f64,
}

impl BinaryBettorState {
    pub fn new(bankroll: f64, win_shares: f64) -> Result<Self> {
        let state = Self { bankroll, win_shares };
        state.check()?;
        Ok(state)
    }

    /// A bettor with no open bets.
    pub fn flat(bankroll: f64) -> Result<Self> {
        Self::new(bankroll, 0.0)
    }

    /// Wealth if the event occurs.
    pub fn wealth_if_event(&self) -> f64 {
        self.bankroll + self.win_shares
    }

    /// Expected wealth under market probability `m` of the event.
    pub fn marked_to_market(&self, m: f64) -> f64 {
        self.bankroll + m * self.win_shares
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !self.bankroll.is_finite() || !self.win_shares.is_finite() {
            return Err(MarketError::InvalidInput(format!("non-finite bettor state {self:?}")));
        }
        if self.bankroll < -SOLVENCY_TOLERANCE {
            return Err(MarketError::Constraint(format!("negative bankroll {}", self.bankroll)));
        }
        if self.wealth_if_event() < -SOLVENCY_TOLERANCE {
            return Err(MarketError::Constraint(format!(
                "bettor cannot cover win shares: bankroll {} + win shares {} < 0",
                self.bankroll, self.win_shares
            )));
        }
        Ok(())
    }
}

/// Check the market-wide normalization of a set of binary bettors.
pub fn check_binary_market(states: &[BinaryBettorState]) -> Result<()> {
    for s in states {
        s.check()?;
    }
    let bankrolls: f64 = states.iter().map(|s| s.bankroll).sum();
    let shares: f64 = states.iter().map(|s| s.win_shares).sum();
    if (bankrolls - 1.0).abs() > WEALTH_TOLERANCE {
        return Err(MarketError::Constraint(format!("bankrolls sum to {bankrolls}, expected 1")));
    }
    if shares.abs() > WEALTH_TOLERANCE {
        return Err(MarketError::Constraint(format!("win shares sum to {shares}, expected 0")));
    }
    Ok(())
}

/// Ending wealth per (outcome, bettor). Rows are outcomes, columns bettors.
///
/// Every entry is nonnegative and every row sums to one: total market wealth
/// is the unit of account whichever outcome occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMatrix(DMatrix<f64>);

impl PositionMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() < 2 {
            return Err(MarketError::TooFewOutcomes(w.nrows()));
        }
        if w.ncols() < 1 {
            return Err(MarketError::DimensionMismatch("position matrix has no bettors".into()));
        }
        if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MarketError::Constraint(format!("position entry {v} is negative or non-finite")));
        }
        for (i, row) in w.row_iter().enumerate() {
            let sum = row.sum();
            if (sum - 1.0).abs() > WEALTH_TOLERANCE {
                return Err(MarketError::Constraint(format!("position row {i} sums to {sum}, expected 1")));
            }
        }
        Ok(Self(w))
    }

    /// Build from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(MarketError::DimensionMismatch("ragged position rows".into()));
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    /// Positions of bettors who hold no bets: every outcome pays their bankroll.
    pub fn flat(outcomes: usize, bankrolls: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(outcomes, bankrolls.len(), |_, j| bankrolls[j]))
    }

    pub fn outcomes(&self) -> usize {
        self.0.nrows()
    }

    pub fn bettors(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.outcomes()).map(|i| self.row(i)).collect()
    }
}

/// Everything needed to clear a market: current positions, the latest
/// estimates of every bettor and the number of completed rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    positions: PositionMatrix,
    estimates: DMatrix<f64>,
    step_index: u64,
}

impl MarketState {
    pub fn new(positions: PositionMatrix, estimates: &[ProbabilitySimplex], step_index: u64) -> Result<Self> {
        let estimates = estimate_matrix(positions.outcomes(), estimates)?;
        if estimates.ncols() != positions.bettors() {
            return Err(MarketError::DimensionMismatch(format!(
                "{} estimate columns for {} bettors",
                estimates.ncols(),
                positions.bettors()
            )));
        }
        Ok(Self { positions, estimates, step_index })
    }

    pub fn positions(&self) -> &PositionMatrix {
        &self.positions
    }

    /// Column `j` is bettor `j`'s probability vector.
    pub fn estimates(&self) -> &DMatrix<f64> {
        &self.estimates
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn outcomes(&self) -> usize {
        self.positions.outcomes()
    }

    pub fn bettors(&self) -> usize {
        self.positions.bettors()
    }

    pub(crate) fn from_parts(positions: PositionMatrix, estimates: DMatrix<f64>, step_index: u64) -> Self {
        Self { positions, estimates, step_index }
    }
}

/// Stack probability vectors as the columns of an `outcomes × bettors` matrix.
pub(crate) fn estimate_matrix(outcomes: usize, estimates: &[ProbabilitySimplex]) -> Result<DMatrix<f64>> {
    if estimates.is_empty() {
        return Err(MarketError::DimensionMismatch("no estimates".into()));
    }
    if let Some(bad) = estimates.iter().find(|e| e.len() != outcomes) {
        return Err(MarketError::DimensionMismatch(format!(
            "estimate has {} outcomes, market has {outcomes}",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(outcomes, estimates.len(), |i, j| estimates[j].get(i)))
}

/// Rewrite binary bettors as a two-row position matrix.
///
/// Row 0 (event occurs) holds `bankroll + win_shares`, row 1 (event fails)
/// holds `bankroll`.
pub fn binary_to_positions(states: &[BinaryBettorState]) -> Result<PositionMatrix> {
    if states.is_empty() {
        return Err(MarketError::DimensionMismatch("no bettors".into()));
    }
    check_binary_market(states)?;
    let w = DMatrix::from_fn(2, states.len(), |i, j| {
        let s = states[j];
        let v = if i == 0 { s.bankroll + s.win_shares } else { s.bankroll };
        // Solvency tolerance lets rounding dust through; the matrix itself is nonnegative.
        v.max(0.0)
    });
    PositionMatrix::new(w)
}

/// Inverse of [`binary_to_positions`].
pub fn positions_to_binary(positions: &PositionMatrix) -> Result<Vec<BinaryBettorState>> {
    if positions.outcomes() != 2 {
        return Err(MarketError::DimensionMismatch(format!(
            "binary form needs 2 outcome rows, got {}",
            positions.outcomes()
        )));
    }
    let w = positions.matrix();
    Ok((0..positions.bettors())
        .map(|j| BinaryBettorState { bankroll: w[(1, j)], win_shares: w[(0, j)] - w[(1, j)] })
        .collect())
}
