//! Average log loss (base 2) and Brier score, the per-forecast baselines the
//! Kelly bankroll is compared against.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::simplex::{ProbabilitySimplex, EPSILON_CLAMP};

/// Scores closer than this are a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Every model's forecast at every step, plus the outcome that happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTrace {
    steps: Vec<Vec<ProbabilitySimplex>>,
    realized_outcome: usize,
}

impl ForecastTrace {
    pub fn new(steps: Vec<Vec<ProbabilitySimplex>>, realized_outcome: usize) -> Result<Self> {
        let first = steps.first().ok_or(MarketError::EmptyTrace)?;
        let models = first.len();
        let outcomes = first.first().map(ProbabilitySimplex::len).unwrap_or(0);
        if models == 0 {
            return Err(MarketError::DimensionMismatch("trace step has no models".into()));
        }
        for (t, step) in steps.iter().enumerate() {
            if step.len() != models || step.iter().any(|p| p.len() != outcomes) {
                return Err(MarketError::DimensionMismatch(format!("trace step {t} differs in shape from step 0")));
            }
        }
        if realized_outcome >= outcomes {
            return Err(MarketError::OutcomeOutOfRange { index: realized_outcome, outcomes });
        }
        Ok(Self { steps, realized_outcome })
    }

    /// Binary trace from per-step event probabilities, one inner vector per step.
    pub fn binary(event_probs: &[Vec<f64>], event_occurred: bool) -> Result<Self> {
        let steps = event_probs
            .iter()
            .map(|step| step.iter().map(|&p| ProbabilitySimplex::binary(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(steps, if event_occurred { 0 } else { 1 })
    }

    pub fn steps(&self) -> &[Vec<ProbabilitySimplex>] {
        &self.steps
    }

    pub fn realized_outcome(&self) -> usize {
        self.realized_outcome
    }

    pub fn models(&self) -> usize {
        self.steps[0].len()
    }

    pub fn outcomes(&self) -> usize {
        self.steps[0][0].len()
    }

    fn check_model(&self, model: usize) -> Result<()> {
        if model >= self.models() {
            return Err(MarketError::DimensionMismatch(format!("model {model} not in trace of {}", self.models())));
        }
        Ok(())
    }
}

/// `-log2(p)` of the probability given to what happened.
pub fn point_log_loss(p_realized: f64) -> f64 {
    -p_realized.max(EPSILON_CLAMP).log2()
}

/// Squared error of an event probability against the 0/1 outcome.
pub fn binary_brier(p_event: f64, event_occurred: bool) -> f64 {
    let y = if event_occurred { 1.0 } else { 0.0 };
    (p_event - y).powi(2)
}

/// Full multiclass Brier: `Σ_i (p_i - 1{i = realized})²`.
pub fn multiclass_brier(probs: &[f64], realized: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, p)| if i == realized { (p - 1.0).powi(2) } else { p * p })
        .sum()
}

pub fn log_loss(trace: &ForecastTrace, model: usize) -> Result<f64> {
    trace.check_model(model)?;
    let total: f64 = trace.steps.iter().map(|s| point_log_loss(s[model].get(trace.realized_outcome))).sum();
    Ok(total / trace.steps.len() as f64)
}

/// Mean Brier score. Two-outcome traces use the single event-probability
/// convention, so a binary Brier lies in `[0, 1]`.
pub fn brier_score(trace: &ForecastTrace, model: usize) -> Result<f64> {
    trace.check_model(model)?;
    let total: f64 = if trace.outcomes() == 2 {
        let occurred = trace.realized_outcome == 0;
        trace.steps.iter().map(|s| binary_brier(s[model].get(0), occurred)).sum()
    } else {
        trace.steps.iter().map(|s| multiclass_brier(s[model].as_slice(), trace.realized_outcome)).sum()
    };
    Ok(total / trace.steps.len() as f64)
}

/// Multiclass Brier on any trace, including binary ones.
pub fn multiclass_brier_score(trace: &ForecastTrace, model: usize) -> Result<f64> {
    trace.check_model(model)?;
    let total: f64 =
        trace.steps.iter().map(|s| multiclass_brier(s[model].as_slice(), trace.realized_outcome)).sum();
    Ok(total / trace.steps.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Model(usize),
    Tie,
}

/// Best model under each metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricWinners {
    pub kelly: Winner,
    pub log_loss: Winner,
    pub brier: Winner,
}

/// Index of the best value, or a tie when the runner-up is within
/// [`TIE_TOLERANCE`] of it. `better(a, b)` says `a` beats `b`.
pub fn pick_winner(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Winner {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = i;
        }
    }
    let tied = values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && (v - values[best]).abs() <= TIE_TOLERANCE);
    if tied {
        Winner::Tie
    } else {
        Winner::Model(best)
    }
}

/// Largest bankroll wins the Kelly metric; smallest average loss wins the others.
pub fn compare_models(trace: &ForecastTrace, kelly_final_bankrolls: &[f64]) -> Result<MetricWinners> {
    let models = trace.models();
    if models < 2 {
        return Err(MarketError::DimensionMismatch("comparison needs at least two models".into()));
    }
    if kelly_final_bankrolls.len() != models {
        return Err(MarketError::DimensionMismatch(format!(
            "{} bankrolls for {models} models",
            kelly_final_bankrolls.len()
        )));
    }
    let ll = (0..models).map(|j| log_loss(trace, j)).collect::<Result<Vec<_>>>()?;
    let br = (0..models).map(|j| brier_score(trace, j)).collect::<Result<Vec<_>>>()?;
    Ok(MetricWinners {
        kelly: pick_winner(kelly_final_bankrolls, |a, b| a > b),
        log_loss: pick_winner(&ll, |a, b| a < b),
        brier: pick_winner(&br, |a, b| a < b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bob_alice() -> ForecastTrace {
        let steps = vec![vec![0.8, 0.5], vec![0.5, 0.5], vec![0.5, 0.8], vec![0.8, 0.8]];
        ForecastTrace::binary(&steps, true).unwrap()
    }

    #[test]
    fn bob_and_alice_score_the_same() {
        let t = bob_alice();
        // (2 * -log2 0.8 + 2 * -log2 0.5) / 4 and (2 * 0.04 + 2 * 0.25) / 4
        for j in 0..2 {
            assert_abs_diff_eq!(log_loss(&t, j).unwrap(), 0.660964047, epsilon = 1e-9);
            assert_abs_diff_eq!(brier_score(&t, j).unwrap(), 0.145, epsilon = 1e-12);
        }
        let w = compare_models(&t, &[0.41, 0.59]).unwrap();
        assert_eq!(w, MetricWinners { kelly: Winner::Model(1), log_loss: Winner::Tie, brier: Winner::Tie });
    }

    #[test]
    fn constant_forecasts() {
        let t = ForecastTrace::binary(&[vec![0.5], vec![0.5]], false).unwrap();
        assert_abs_diff_eq!(log_loss(&t, 0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(brier_score(&t, 0).unwrap(), 0.25, epsilon = 1e-15);

        let sure = ForecastTrace::binary(&[vec![1.0], vec![1.0]], true).unwrap();
        assert!(log_loss(&sure, 0).unwrap() < 1e-8);
        assert!(brier_score(&sure, 0).unwrap() < 1e-16);
    }

    #[test]
    fn identical_models_tie_everywhere() {
        let t = ForecastTrace::binary(&[vec![0.3, 0.3], vec![0.6, 0.6]], true).unwrap();
        let w = compare_models(&t, &[0.5, 0.5]).unwrap();
        assert_eq!(w, MetricWinners { kelly: Winner::Tie, log_loss: Winner::Tie, brier: Winner::Tie });
    }

    #[test]
    fn uniformly_better_model_wins_scores() {
        let t = ForecastTrace::binary(&[vec![0.9, 0.6], vec![0.7, 0.55]], true).unwrap();
        let w = compare_models(&t, &[0.5, 0.5]).unwrap();
        assert_eq!(w.log_loss, Winner::Model(0));
        assert_eq!(w.brier, Winner::Model(0));
        assert_eq!(w.kelly, Winner::Tie);
    }

    #[test]
    fn multiclass_brier_on_three_outcomes() {
        let p = ProbabilitySimplex::new(&[0.2, 0.5, 0.3]).unwrap();
        let t = ForecastTrace::new(vec![vec![p]], 1).unwrap();
        assert_abs_diff_eq!(brier_score(&t, 0).unwrap(), 0.04 + 0.25 + 0.09, epsilon = 1e-15);
    }

    #[test]
    fn trace_errors() {
        assert_eq!(ForecastTrace::new(vec![], 0), Err(MarketError::EmptyTrace));
        assert!(ForecastTrace::binary(&[vec![0.5, 0.5], vec![0.5]], true).is_err());
        let p = ProbabilitySimplex::binary(0.5).unwrap();
        assert!(ForecastTrace::new(vec![vec![p.clone()]], 2).is_err());
        let t = ForecastTrace::new(vec![vec![p]], 0).unwrap();
        assert!(log_loss(&t, 1).is_err());
        assert!(compare_models(&t, &[1.0]).is_err());
    }

    fn traces() -> impl Strategy<Value = (Vec<Vec<f64>>, bool)> {
        (1usize..20, 2usize..4).prop_flat_map(|(steps, models)| {
            (prop::collection::vec(prop::collection::vec(0.0f64..=1.0, models), steps), any::<bool>())
        })
    }

    proptest! {
        #[test]
        fn bounds_and_identities((probs, occurred) in traces()) {
            let t = ForecastTrace::binary(&probs, occurred).unwrap();
            for j in 0..t.models() {
                let ll = log_loss(&t, j).unwrap();
                let b = brier_score(&t, j).unwrap();
                let mb = multiclass_brier_score(&t, j).unwrap();
                prop_assert!(ll >= 0.0);
                prop_assert!((0.0..=1.0).contains(&b));
                prop_assert!((mb - 2.0 * b).abs() <= 1e-12);
            }
        }

        #[test]
        fn step_order_does_not_matter((probs, occurred) in traces()) {
            let t = ForecastTrace::binary(&probs, occurred).unwrap();
            let mut rev = probs.clone();
            rev.reverse();
            let r = ForecastTrace::binary(&rev, occurred).unwrap();
            for j in 0..t.models() {
                prop_assert!((log_loss(&t, j).unwrap() - log_loss(&r, j).unwrap()).abs() <= 1e-12);
                prop_assert!((brier_score(&t, j).unwrap() - brier_score(&r, j).unwrap()).abs() <= 1e-12);
            }
        }
    }
}
