//! One simulated game: points are played with the true probability, and
//! before every point the models forecast, bet against each other in a
//! binary market, and get scored.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binary::{apply_round_in_place, settle};
use crate::error::{MarketError, Result};
use crate::position::{BinaryBettorState, WEALTH_TOLERANCE};
use crate::scoring::{binary_brier, compare_models, point_log_loss, ForecastTrace, MetricWinners};
use crate::sim::game::{GameRules, WinProbCache};
use crate::sim::models::{ModelKind, ModelSpec, ModelState};
use crate::sim::rng::replication_rng;
use crate::simplex::clamp_probability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestConfig {
    pub true_point_prob: f64,
    pub models: Vec<ModelSpec>,
    pub num_games: usize,
    pub num_replications: usize,
    pub rng_seed: u64,
    pub initial_bankrolls: Vec<f64>,
    pub rules: GameRules,
}

impl ContestConfig {
    /// One game, one replication, uniform priors, seed 0.
    pub fn new(true_point_prob: f64, models: Vec<ModelSpec>) -> Self {
        let n = models.len().max(1);
        Self {
            true_point_prob,
            initial_bankrolls: vec![1.0 / n as f64; n],
            models,
            num_games: 1,
            num_replications: 1,
            rng_seed: 0,
            rules: GameRules::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.true_point_prob > 0.0 && self.true_point_prob < 1.0) {
            return Err(MarketError::InvalidInput(format!("true point probability {}", self.true_point_prob)));
        }
        if self.models.len() < 2 {
            return Err(MarketError::DimensionMismatch("a contest needs at least two models".into()));
        }
        for m in &self.models {
            m.validate()?;
        }
        if self.initial_bankrolls.len() != self.models.len() {
            return Err(MarketError::DimensionMismatch(format!(
                "{} bankrolls for {} models",
                self.initial_bankrolls.len(),
                self.models.len()
            )));
        }
        let total: f64 = self.initial_bankrolls.iter().sum();
        if self.initial_bankrolls.iter().any(|b| !(*b >= 0.0)) || (total - 1.0).abs() > WEALTH_TOLERANCE {
            return Err(MarketError::Constraint(format!("initial bankrolls must be nonnegative and sum to 1, got {total}")));
        }
        if self.num_games == 0 || self.num_replications == 0 {
            return Err(MarketError::InvalidInput("num_games and num_replications must be positive".into()));
        }
        Ok(())
    }
}

/// Full point-by-point record of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestRecord {
    pub game_index: u64,
    pub team_a_won: bool,
    pub points_played: usize,
    /// Win probability each model gave team A before each point.
    pub model_probs: Vec<Vec<f64>>,
    pub market_probs: Vec<f64>,
    /// Marked-to-market bankrolls before each point; entry `n` is the
    /// credibility after `n` points.
    pub credibilities: Vec<Vec<f64>>,
    pub starting_bankrolls: Vec<f64>,
    pub final_bankrolls: Vec<f64>,
    pub log_loss: Vec<f64>,
    pub brier: Vec<f64>,
}

impl ContestRecord {
    /// Credibilities after `points` points; the settled bankrolls once the
    /// game is over.
    pub fn credibility_after(&self, points: usize) -> &[f64] {
        if points < self.points_played {
            &self.credibilities[points]
        } else {
            &self.final_bankrolls
        }
    }

    pub fn forecast_trace(&self) -> Result<ForecastTrace> {
        ForecastTrace::binary(&self.model_probs, self.team_a_won)
    }

    pub fn winners(&self) -> Result<MetricWinners> {
        compare_models(&self.forecast_trace()?, &self.final_bankrolls)
    }
}

/// Score totals for one game without the per-point trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSummary {
    pub team_a_won: bool,
    pub points_played: usize,
    pub final_bankrolls: Vec<f64>,
    pub log_loss_sum: Vec<f64>,
    pub brier_sum: Vec<f64>,
}

/// A validated contest with its win-probability tables built.
#[derive(Debug, Clone)]
pub struct Contest {
    config: ContestConfig,
    cache: WinProbCache,
}

impl Contest {
    pub fn new(config: ContestConfig) -> Result<Self> {
        config.validate()?;
        let probs = config
            .models
            .iter()
            .filter(|m| m.kind != ModelKind::RandomWalk)
            .flat_map(ModelSpec::reachable_point_probs);
        let cache = WinProbCache::new(config.rules, probs)?;
        Ok(Self { config, cache })
    }

    pub fn config(&self) -> &ContestConfig {
        &self.config
    }

    /// Play one game from `bankrolls`, calling `on_point(index, model_probs,
    /// market_prob, credibilities)` before each point is played.
    pub(crate) fn play<F>(&self, bankrolls: &[f64], rng: &mut ChaCha8Rng, mut on_point: F) -> Result<GameSummary>
    where
        F: FnMut(usize, &[f64], f64, &[f64]),
    {
        let rules = self.config.rules;
        let k = self.config.models.len();
        let mut models: Vec<ModelState> = self.config.models.iter().copied().map(ModelState::new).collect();
        let mut states: Vec<BinaryBettorState> =
            bankrolls.iter().map(|&b| BinaryBettorState { bankroll: b, win_shares: 0.0 }).collect();
        let mut estimates = vec![0.0; k];
        let mut credibilities = vec![0.0; k];
        // Loss totals under each possible final result, resolved at the end.
        let mut ll = vec![(0.0, 0.0); k];
        let mut brier = vec![(0.0, 0.0); k];
        let mut history: Vec<bool> = Vec::with_capacity(2 * rules.target_points as usize + 16);
        let (mut a, mut b) = (0u32, 0u32);

        while !rules.is_over(a, b) {
            for (j, model) in models.iter().enumerate() {
                let p = model.point_prob(&history);
                let wp = clamp_probability(self.cache.win_prob(a, b, p)?);
                estimates[j] = wp;
                ll[j].0 += point_log_loss(wp);
                ll[j].1 += point_log_loss(1.0 - wp);
                brier[j].0 += binary_brier(wp, true);
                brier[j].1 += binary_brier(wp, false);
            }
            let m = apply_round_in_place(&estimates, &mut states, &mut credibilities)?;
            on_point(history.len(), &estimates, m, &credibilities);
            check_conservation(&states, history.len())?;

            let a_scores = rng.random::<f64>() < self.config.true_point_prob;
            if a_scores {
                a += 1;
            } else {
                b += 1;
            }
            history.push(a_scores);
            for model in models.iter_mut() {
                model.observe(rng);
            }
        }

        let team_a_won = a > b;
        let final_bankrolls = settle(&states, team_a_won)?;
        let total: f64 = final_bankrolls.iter().sum();
        if (total - 1.0).abs() > WEALTH_TOLERANCE {
            return Err(MarketError::InvariantViolation(format!("settled bankrolls sum to {total}")));
        }
        let pick = |(won, lost): (f64, f64)| if team_a_won { won } else { lost };
        Ok(GameSummary {
            team_a_won,
            points_played: history.len(),
            final_bankrolls,
            log_loss_sum: ll.into_iter().map(pick).collect(),
            brier_sum: brier.into_iter().map(pick).collect(),
        })
    }

    /// Play a game and keep only the totals.
    pub fn play_summary(&self, bankrolls: &[f64], rng: &mut ChaCha8Rng) -> Result<GameSummary> {
        self.play(bankrolls, rng, |_, _, _, _| {})
    }

    /// Play a game and keep every point.
    pub fn simulate_game(&self, game_index: u64, bankrolls: &[f64], rng: &mut ChaCha8Rng) -> Result<ContestRecord> {
        let mut model_probs = Vec::new();
        let mut market_probs = Vec::new();
        let mut credibilities = Vec::new();
        let summary = self.play(bankrolls, rng, |_, probs, m, creds| {
            model_probs.push(probs.to_vec());
            market_probs.push(m);
            credibilities.push(creds.to_vec());
        })?;
        let n = summary.points_played as f64;
        Ok(ContestRecord {
            game_index,
            team_a_won: summary.team_a_won,
            points_played: summary.points_played,
            model_probs,
            market_probs,
            credibilities,
            starting_bankrolls: bankrolls.to_vec(),
            final_bankrolls: summary.final_bankrolls,
            log_loss: summary.log_loss_sum.iter().map(|s| s / n).collect(),
            brier: summary.brier_sum.iter().map(|s| s / n).collect(),
        })
    }
}

fn check_conservation(states: &[BinaryBettorState], point: usize) -> Result<()> {
    let (b, w) = states.iter().fold((0.0, 0.0), |(b, w), s| (b + s.bankroll, w + s.win_shares));
    if (b - 1.0).abs() > WEALTH_TOLERANCE || w.abs() > WEALTH_TOLERANCE {
        return Err(MarketError::InvariantViolation(format!(
            "wealth not conserved before point {point}: bankrolls {b}, win shares {w:e}"
        )));
    }
    Ok(())
}

/// Simulate game `game_index` of replication 0 under `config`, starting from
/// the configured bankrolls.
pub fn simulate_game(config: &ContestConfig, game_index: u64, rng: &mut ChaCha8Rng) -> Result<ContestRecord> {
    Contest::new(config.clone())?.simulate_game(game_index, &config.initial_bankrolls, rng)
}

/// Run every game of one replication in sequence, carrying bankrolls over.
pub fn simulate_sequence(config: &ContestConfig, replication: u64) -> Result<Vec<ContestRecord>> {
    let contest = Contest::new(config.clone())?;
    let mut rng = replication_rng(config.rng_seed, replication);
    let mut bankrolls = config.initial_bankrolls.clone();
    let mut out = Vec::with_capacity(config.num_games);
    for g in 0..config.num_games {
        let record = contest.simulate_game(g as u64, &bankrolls, &mut rng)?;
        bankrolls = record.final_bankrolls.clone();
        out.push(record);
    }
    Ok(out)
}
