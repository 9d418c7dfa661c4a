//! Two-outcome Kelly market: bankroll plus signed win shares per bettor.
//!
//! A round clears the market at the probability where every bettor's Kelly
//! bet (accounting for the win shares they already hold) is matched by
//! another bettor acting as bookmaker. Trades execute at the odds
//! `o = (1 - m) / m`; a bet of size `x` moves `x` out of the bankroll and adds
//! `x (o + 1)` win shares.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::position::{check_binary_market, BinaryBettorState, SOLVENCY_TOLERANCE, WEALTH_TOLERANCE};

/// Outcome of one synchronized betting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRoundResult {
    pub market_probability: f64,
    pub market_odds: f64,
    /// Fraction of bankroll wagered; negative when acting as bookmaker.
    pub fractions: Vec<f64>,
    pub bet_amounts: Vec<f64>,
    pub win_share_deltas: Vec<f64>,
    pub updated_states: Vec<BinaryBettorState>,
    /// Marked-to-market value of each bettor's incoming position.
    pub credibilities: Vec<f64>,
}

/// Kelly fraction of bankroll to bet at `odds` for a bettor who already holds
/// `win_shares` on the event.
///
/// `f = p - (1 - p) / odds * (1 + win_shares / bankroll)`
pub fn kelly_fraction(p: f64, odds: f64, bankroll: f64, win_shares: f64) -> Result<f64> {
    if ![p, odds, bankroll, win_shares].iter().all(|v| v.is_finite()) {
        return Err(MarketError::InvalidInput("kelly_fraction inputs must be finite".into()));
    }
    if odds <= 0.0 {
        return Err(MarketError::InvalidInput(format!("odds must be positive, got {odds}")));
    }
    if bankroll <= 0.0 {
        return Err(MarketError::InvalidInput(format!("bankroll must be positive, got {bankroll}")));
    }
    Ok(p - (1.0 - p) / odds * (1.0 + win_shares / bankroll))
}

/// Market-clearing probability of the event:
/// `sum(p_j b_j) / (1 - sum(p_j w_j))`.
pub fn market_probability(estimates: &[f64], states: &[BinaryBettorState]) -> Result<f64> {
    clearing(estimates, states).map(|c| c.probability)
}

struct Clearing {
    probability: f64,
    odds: f64,
}

/// With `A = sum(p_j b_j)` and `B = sum((1 - p_j)(b_j + w_j))`, the budget
/// constraints give `1 - sum(p_j w_j) = A + B`, so `m = A / (A + B)` and the
/// odds are `B / A`. This form has no cancellation when `m` is near 0 or 1.
fn clearing(estimates: &[f64], states: &[BinaryBettorState]) -> Result<Clearing> {
    if estimates.len() != states.len() {
        return Err(MarketError::DimensionMismatch(format!(
            "{} estimates for {} bettors",
            estimates.len(),
            states.len()
        )));
    }
    if let Some(&p) = estimates.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p < 1.0)) {
        return Err(MarketError::InvalidInput(format!("estimate {p} outside (0, 1)")));
    }
    check_binary_market(states)?;
    let (a, b) = estimates.iter().zip(states).fold((0.0, 0.0), |(a, b), (p, s)| {
        (a + p * s.bankroll, b + (1.0 - p) * s.wealth_if_event())
    });
    if !(a > 0.0 && b > 0.0) {
        return Err(MarketError::DegenerateMarket(a + b));
    }
    Ok(Clearing { probability: a / (a + b), odds: b / a })
}

/// Clear the market, size every bettor's Kelly bet and execute the trades.
pub fn apply_round(estimates: &[f64], states: &[BinaryBettorState]) -> Result<BinaryRoundResult> {
    if states.len() < 2 {
        return Err(MarketError::DimensionMismatch(format!("need at least 2 bettors, got {}", states.len())));
    }
    let Clearing { probability: m, odds } = clearing(estimates, states)?;

    let credibilities: Vec<f64> = states.iter().map(|s| s.marked_to_market(m)).collect();

    let mut fractions = Vec::with_capacity(states.len());
    let mut bet_amounts = Vec::with_capacity(states.len());
    for (&p, s) in estimates.iter().zip(states) {
        let (f, bet) = kelly_trade(p, odds, s);
        fractions.push(f);
        bet_amounts.push(bet);
    }
    let win_share_deltas: Vec<f64> = bet_amounts.iter().map(|x| x * (odds + 1.0)).collect();
    let updated_states: Vec<BinaryBettorState> = states
        .iter()
        .zip(bet_amounts.iter().zip(&win_share_deltas))
        .map(|(s, (bet, dw))| BinaryBettorState { bankroll: s.bankroll - bet, win_shares: s.win_shares + dw })
        .collect();

    let result = BinaryRoundResult {
        market_probability: m,
        market_odds: odds,
        fractions,
        bet_amounts,
        win_share_deltas,
        updated_states,
        credibilities,
    };
    check_round(&result)?;
    Ok(result)
}

/// Fraction and amount one bettor wagers at `odds`.
fn kelly_trade(p: f64, odds: f64, s: &BinaryBettorState) -> (f64, f64) {
    // f * b, written so a tiny bankroll does not blow up w / b. With no
    // bankroll only open win shares can be sold back.
    let bet = p * s.bankroll - (1.0 - p) * s.wealth_if_event() / odds;
    if s.bankroll > 0.0 {
        (bet / s.bankroll, bet)
    } else {
        (0.0, bet)
    }
}

/// Allocation-free round for the simulation loop: trades `states` in place,
/// writes each bettor's marked-to-market value into `credibilities` and
/// returns the clearing probability. Same arithmetic as [`apply_round`].
pub fn apply_round_in_place(
    estimates: &[f64],
    states: &mut [BinaryBettorState],
    credibilities: &mut [f64],
) -> Result<f64> {
    if states.len() < 2 || credibilities.len() != states.len() {
        return Err(MarketError::DimensionMismatch("need at least 2 bettors and one credibility slot each".into()));
    }
    let Clearing { probability: m, odds } = clearing(estimates, states)?;
    let mut bets = 0.0;
    for ((&p, s), cred) in estimates.iter().zip(states.iter_mut()).zip(credibilities.iter_mut()) {
        *cred = s.marked_to_market(m);
        let (_, bet) = kelly_trade(p, odds, s);
        bets += bet;
        s.bankroll -= bet;
        s.win_shares += bet * (odds + 1.0);
    }
    if bets.abs() > WEALTH_TOLERANCE {
        return Err(MarketError::InvariantViolation(format!("bets do not clear: sum {bets:e}")));
    }
    Ok(m)
}

/// Post-conditions of a round: trades net out, wealth is conserved and
/// nobody is bankrupt.
fn check_round(r: &BinaryRoundResult) -> Result<()> {
    let bets: f64 = r.bet_amounts.iter().sum();
    let deltas: f64 = r.win_share_deltas.iter().sum();
    let creds: f64 = r.credibilities.iter().sum();
    // Win-share deltas scale with the odds, so their rounding error does too.
    let delta_tolerance = WEALTH_TOLERANCE * (1.0 + r.market_odds).max(1.0);
    if bets.abs() > WEALTH_TOLERANCE {
        return Err(MarketError::InvariantViolation(format!("bets do not clear: sum {bets:e}")));
    }
    if deltas.abs() > delta_tolerance {
        return Err(MarketError::InvariantViolation(format!("win-share deltas do not net out: sum {deltas:e}")));
    }
    if (creds - 1.0).abs() > WEALTH_TOLERANCE {
        return Err(MarketError::InvariantViolation(format!("credibilities sum to {creds}")));
    }
    for (j, s) in r.updated_states.iter().enumerate() {
        if s.bankroll < -SOLVENCY_TOLERANCE || s.wealth_if_event() < -SOLVENCY_TOLERANCE {
            return Err(MarketError::InvariantViolation(format!("bettor {j} insolvent after round: {s:?}")));
        }
    }
    let (b, w): (f64, f64) =
        r.updated_states.iter().fold((0.0, 0.0), |(b, w), s| (b + s.bankroll, w + s.win_shares));
    if (b - 1.0).abs() > WEALTH_TOLERANCE || w.abs() > delta_tolerance {
        return Err(MarketError::InvariantViolation(format!(
            "wealth not conserved: bankrolls {b}, win shares {w:e}"
        )));
    }
    Ok(())
}

/// Pay out open win shares: each bettor ends with `b + w` if the event
/// occurred and `b` otherwise.
pub fn settle(states: &[BinaryBettorState], event_occurred: bool) -> Result<Vec<f64>> {
    for s in states {
        s.check()?;
    }
    Ok(states
        .iter()
        .map(|s| if event_occurred { s.wealth_if_event() } else { s.bankroll })
        .collect())
}
