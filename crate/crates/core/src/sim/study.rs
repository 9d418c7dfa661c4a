//! Monte Carlo studies: how often each metric picks the correct model, how
//! credibility moves during a game, and the iterated grid of fixed models.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::scoring::{pick_winner, Winner};
use crate::sim::contest::{Contest, ContestConfig};
use crate::sim::game::GameRules;
use crate::sim::models::ModelSpec;
use crate::sim::rng::{grid_stream, map_indices, replication_rng};

/// Checkpoints (in games) reported by the grid unless told otherwise.
pub const DEFAULT_GRID_CHECKPOINTS: [usize; 5] = [1, 5, 10, 25, 50];

/// A correct model, the one matching the point generator, against an
/// incorrect one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub true_point_prob: f64,
    pub correct: ModelSpec,
    pub incorrect: ModelSpec,
}

impl Scenario {
    pub fn fixed(true_p: f64, wrong_p: f64) -> Self {
        Self {
            name: format!("fixed {true_p} vs {wrong_p}"),
            true_point_prob: true_p,
            correct: ModelSpec::fixed(true_p),
            incorrect: ModelSpec::fixed(wrong_p),
        }
    }

    /// Fixed model at `true_p` against a recency-biased model with the same base.
    pub fn recency(true_p: f64) -> Self {
        Self {
            name: format!("fixed {true_p} vs recency"),
            true_point_prob: true_p,
            correct: ModelSpec::fixed(true_p),
            incorrect: ModelSpec::recency(true_p),
        }
    }

    /// Fixed model at `true_p` against a random walk that starts there.
    pub fn random_walk(true_p: f64) -> Self {
        Self {
            name: format!("fixed {true_p} vs random walk"),
            true_point_prob: true_p,
            correct: ModelSpec::fixed(true_p),
            incorrect: ModelSpec::random_walk(true_p),
        }
    }

    /// Contest with the correct model at index 0 and even priors.
    pub fn contest_config(&self, replications: usize, seed: u64) -> ContestConfig {
        let mut c = ContestConfig::new(self.true_point_prob, vec![self.correct, self.incorrect]);
        c.num_replications = replications;
        c.rng_seed = seed;
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTally {
    pub correct: u64,
    pub tied: u64,
    pub incorrect: u64,
    /// `(correct + tied / 2) / total`.
    pub accuracy: f64,
}

impl MetricTally {
    fn add(&mut self, w: Winner, correct_index: usize) {
        match w {
            Winner::Model(i) if i == correct_index => self.correct += 1,
            Winner::Tie => self.tied += 1,
            Winner::Model(_) => self.incorrect += 1,
        }
    }

    fn add_score(&mut self, score: u8) {
        match score {
            2 => self.correct += 1,
            1 => self.tied += 1,
            _ => self.incorrect += 1,
        }
    }

    fn finish(&mut self) {
        let n = self.correct + self.tied + self.incorrect;
        self.accuracy = if n == 0 { 0.0 } else { (self.correct as f64 + 0.5 * self.tied as f64) / n as f64 };
    }

    /// Twice the accuracy numerator, so ties compare exactly.
    fn half_points(&self) -> u64 {
        2 * self.correct + self.tied
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub replications: usize,
    pub kelly: MetricTally,
    pub log_loss: MetricTally,
    pub brier: MetricTally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointCredibility {
    pub points: usize,
    /// Mean credibility per model, correct model first.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub accuracy: AccuracyTable,
    pub credibility: Vec<CheckpointCredibility>,
    pub mean_points_played: f64,
}

struct RepResult {
    winners: [Winner; 3],
    credibility: Vec<Vec<f64>>,
    points: usize,
}

fn check_checkpoints(checkpoints: &[usize]) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MarketError::InvalidInput(format!("checkpoints must be strictly ascending: {checkpoints:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub replications: usize,
    pub seed: u64,
    /// Credibility checkpoints, in points played.
    pub checkpoints: Vec<usize>,
    pub rules: GameRules,
    /// Starting bankrolls (correct, incorrect); even when `None`.
    pub priors: Option<[f64; 2]>,
}

impl StudyOptions {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self { replications, seed, checkpoints: Vec::new(), rules: GameRules::default(), priors: None }
    }

    pub fn with_checkpoints(mut self, checkpoints: &[usize]) -> Self {
        self.checkpoints = checkpoints.to_vec();
        self
    }
}

/// One game per replication: accuracy of every metric plus the mean
/// credibility after each checkpoint (in points).
pub fn run_study(scenario: &Scenario, options: &StudyOptions) -> Result<StudyReport> {
    let StudyOptions { replications, seed, ref checkpoints, rules, priors } = *options;
    check_checkpoints(checkpoints)?;
    let mut config = scenario.contest_config(replications, seed);
    config.rules = rules;
    if let Some(p) = priors {
        config.initial_bankrolls = p.to_vec();
    }
    let contest = Contest::new(config)?;
    let start = contest.config().initial_bankrolls.clone();

    let reps = map_indices(replications, |r| -> Result<RepResult> {
        let mut rng = replication_rng(seed, r as u64);
        let mut credibility = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        let summary = contest.play(&start, &mut rng, |point, _, _, creds| {
            while next < checkpoints.len() && checkpoints[next] == point {
                credibility.push(creds.to_vec());
                next += 1;
            }
        })?;
        while credibility.len() < checkpoints.len() {
            credibility.push(summary.final_bankrolls.clone());
        }
        let n = summary.points_played as f64;
        let ll: Vec<f64> = summary.log_loss_sum.iter().map(|s| s / n).collect();
        let br: Vec<f64> = summary.brier_sum.iter().map(|s| s / n).collect();
        Ok(RepResult {
            winners: [
                pick_winner(&summary.final_bankrolls, |a, b| a > b),
                pick_winner(&ll, |a, b| a < b),
                pick_winner(&br, |a, b| a < b),
            ],
            credibility,
            points: summary.points_played,
        })
    });

    let mut tallies = [MetricTally::default(); 3];
    let mut sums = vec![vec![0.0; 2]; checkpoints.len()];
    let mut points = 0usize;
    for rep in reps {
        let rep = rep?;
        for (t, w) in tallies.iter_mut().zip(rep.winners) {
            t.add(w, 0);
        }
        for (s, c) in sums.iter_mut().zip(&rep.credibility) {
            s[0] += c[0];
            s[1] += c[1];
        }
        points += rep.points;
    }
    tallies.iter_mut().for_each(MetricTally::finish);
    let n = replications as f64;
    Ok(StudyReport {
        scenario: scenario.clone(),
        seed,
        accuracy: AccuracyTable { replications, kelly: tallies[0], log_loss: tallies[1], brier: tallies[2] },
        credibility: checkpoints
            .iter()
            .zip(sums)
            .map(|(&points, s)| CheckpointCredibility { points, mean: s.iter().map(|v| v / n).collect() })
            .collect(),
        mean_points_played: points as f64 / n,
    })
}

pub fn run_single_round_study(scenario: &Scenario, replications: usize, seed: u64) -> Result<AccuracyTable> {
    Ok(run_study(scenario, &StudyOptions::new(replications, seed))?.accuracy)
}

/// Mean marked-to-market credibility after each checkpoint. Games that end
/// sooner contribute their settled bankrolls.
pub fn credibility_trace(
    scenario: &Scenario,
    replications: usize,
    checkpoints: &[usize],
    seed: u64,
) -> Result<Vec<CheckpointCredibility>> {
    Ok(run_study(scenario, &StudyOptions::new(replications, seed).with_checkpoints(checkpoints))?.credibility)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub probs: Vec<f64>,
    pub games_per_sequence: usize,
    pub replications: usize,
    pub seed: u64,
    /// Checkpoints in games; ones past `games_per_sequence` are dropped.
    pub checkpoints: Vec<usize>,
    pub rules: GameRules,
    /// Starting bankrolls (correct, incorrect) of every sequence.
    pub priors: [f64; 2],
    /// Explicit (correct, incorrect) pairs; every ordered pair of `probs`
    /// when `None`.
    pub pairs: Option<Vec<(f64, f64)>>,
}

impl GridConfig {
    /// 1,000 replications of 50-game sequences over `probs`.
    pub fn new(probs: Vec<f64>) -> Self {
        Self {
            probs,
            games_per_sequence: 50,
            replications: 1000,
            seed: 0,
            checkpoints: DEFAULT_GRID_CHECKPOINTS.to_vec(),
            rules: GameRules::default(),
            priors: [0.5, 0.5],
            pairs: None,
        }
    }

    /// `min, min + step, ...` up to `max`, rounded to clean decimals.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(min <= max) {
            return Err(MarketError::InvalidInput(format!("bad grid range {min}..{max} step {step}")));
        }
        let n = ((max - min) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| ((min + i as f64 * step) * 1e10).round() / 1e10).collect())
    }

    /// Only the given (correct, incorrect) pairs.
    pub fn with_pairs(pairs: Vec<(f64, f64)>) -> Self {
        let mut probs: Vec<f64> = Vec::new();
        for &(c, i) in &pairs {
            for p in [c, i] {
                if !probs.contains(&p) {
                    probs.push(p);
                }
            }
        }
        Self { pairs: Some(pairs), ..Self::new(probs) }
    }

    pub fn scenarios(&self) -> Vec<(f64, f64)> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => grid_scenarios(&self.probs),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(pairs) = &self.pairs {
            if pairs.is_empty() || pairs.iter().any(|(c, i)| c == i) {
                return Err(MarketError::InvalidInput("grid pairs must be non-empty and off the diagonal".into()));
            }
        }
        if self.probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(MarketError::InvalidInput(format!("grid probabilities must lie in (0, 1): {:?}", self.probs)));
        }
        for (i, a) in self.probs.iter().enumerate() {
            if self.probs[..i].contains(a) {
                return Err(MarketError::InvalidInput(format!("grid probability {a} repeated")));
            }
        }
        if self.probs.len() < 2 || self.games_per_sequence == 0 || self.replications == 0 {
            return Err(MarketError::InvalidInput("grid needs two probabilities, one game and one replication".into()));
        }
        check_checkpoints(&self.checkpoints)?;
        if self.checkpoints.first() == Some(&0) {
            return Err(MarketError::InvalidInput("grid checkpoints count games and start at 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub correct_p: f64,
    pub incorrect_p: f64,
    pub kelly: MetricTally,
    pub log_loss: MetricTally,
    pub brier: MetricTally,
    /// Letters of the metrics with the best accuracy: K, L, B.
    pub label: String,
}

impl GridCell {
    fn new(correct_p: f64, incorrect_p: f64, mut tallies: [MetricTally; 3]) -> Self {
        tallies.iter_mut().for_each(MetricTally::finish);
        let best = tallies.iter().map(MetricTally::half_points).max().unwrap_or(0);
        let label = tallies
            .iter()
            .zip(['K', 'L', 'B'])
            .filter(|(t, _)| t.half_points() == best)
            .map(|(_, c)| c)
            .collect();
        let [kelly, log_loss, brier] = tallies;
        Self { correct_p, incorrect_p, kelly, log_loss, brier, label }
    }
}

/// How often Kelly alone is best, shares the best, or is beaten.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSummary {
    pub kelly_wins: usize,
    pub ties: usize,
    pub kelly_losses: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheckpoint {
    pub games: usize,
    pub cells: Vec<GridCell>,
    pub summary: GridSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: GridConfig,
    pub checkpoints: Vec<GridCheckpoint>,
}

/// Every ordered pair of distinct grid probabilities: the first generates the
/// points and is the correct model.
pub fn grid_scenarios(probs: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &c in probs {
        for &i in probs {
            if c != i {
                out.push((c, i));
            }
        }
    }
    out
}

/// Sequences of games between two fixed models for every ordered grid pair.
/// Bankrolls carry over from game to game; log loss and Brier average over
/// every point so far.
pub fn run_iterated_grid(config: &GridConfig) -> Result<GridReport> {
    config.validate()?;
    let checkpoints: Vec<usize> =
        config.checkpoints.iter().copied().filter(|&g| g <= config.games_per_sequence).collect();
    let scenarios = config.scenarios();
    let contests = scenarios
        .iter()
        .map(|&(c, i)| {
            let mut cfg = ContestConfig::new(c, vec![ModelSpec::fixed(c), ModelSpec::fixed(i)]);
            cfg.rules = config.rules;
            cfg.rng_seed = config.seed;
            cfg.initial_bankrolls = config.priors.to_vec();
            Contest::new(cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let reps = config.replications;
    // Per task: one score per metric per checkpoint, 2 = correct, 1 = tie.
    let results = map_indices(scenarios.len() * reps, |task| -> Result<Vec<[u8; 3]>> {
        let (s, r) = (task / reps, task % reps);
        let contest = &contests[s];
        let mut rng = replication_rng(config.seed, grid_stream(s, r));
        let mut bankrolls = contest.config().initial_bankrolls.clone();
        let (mut ll, mut br) = (vec![0.0; 2], vec![0.0; 2]);
        let mut points = 0usize;
        let mut scores = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        for game in 1..=config.games_per_sequence {
            let g = contest.play_summary(&bankrolls, &mut rng)?;
            for j in 0..2 {
                ll[j] += g.log_loss_sum[j];
                br[j] += g.brier_sum[j];
            }
            points += g.points_played;
            bankrolls = g.final_bankrolls;
            if next < checkpoints.len() && checkpoints[next] == game {
                let n = points as f64;
                let avg = |v: &[f64]| v.iter().map(|x| x / n).collect::<Vec<_>>();
                scores.push([
                    score(pick_winner(&bankrolls, |a, b| a > b)),
                    score(pick_winner(&avg(&ll), |a, b| a < b)),
                    score(pick_winner(&avg(&br), |a, b| a < b)),
                ]);
                next += 1;
            }
        }
        Ok(scores)
    });

    let mut tallies = vec![vec![[MetricTally::default(); 3]; scenarios.len()]; checkpoints.len()];
    for (task, res) in results.into_iter().enumerate() {
        let s = task / reps;
        for (k, sc) in res?.into_iter().enumerate() {
            for (t, v) in tallies[k][s].iter_mut().zip(sc) {
                t.add_score(v);
            }
        }
    }

    let out = checkpoints
        .iter()
        .zip(tallies)
        .map(|(&games, per_scenario)| {
            let cells: Vec<GridCell> = scenarios
                .iter()
                .zip(per_scenario)
                .map(|(&(c, i), t)| GridCell::new(c, i, t))
                .collect();
            let mut summary = GridSummary { total: cells.len(), ..Default::default() };
            for cell in &cells {
                match (cell.label.contains('K'), cell.label.len()) {
                    (true, 1) => summary.kelly_wins += 1,
                    (true, _) => summary.ties += 1,
                    (false, _) => summary.kelly_losses += 1,
                }
            }
            GridCheckpoint { games, cells, summary }
        })
        .collect();
    Ok(GridReport { config: config.clone(), checkpoints: out })
}

fn score(w: Winner) -> u8 {
    match w {
        Winner::Model(0) => 2,
        Winner::Tie => 1,
        Winner::Model(_) => 0,
    }
}
