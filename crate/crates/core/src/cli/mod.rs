//! Command-line front end.

pub mod evaluate;
pub mod output;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::sim::{run_iterated_grid, run_study, GridConfig, Scenario, StudyOptions};

#[derive(Debug, Parser)]
#[command(name = "kelly-market", version, about = "Evaluate probabilistic forecasts with a Kelly betting market")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write a plot-ready CSV series here.
    #[arg(long, global = true, value_name = "PATH")]
    pub trace_out: Option<PathBuf>,
    /// Starting bankrolls, comma separated; normalized to sum to one.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub priors: Option<Vec<f64>>,
    /// Carry bankrolls from one event to the next.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay forecast streams through the market and score them.
    Evaluate {
        /// CSV with event_id,step,model_id,p_0[,p_1,...] (or a single p).
        stream: PathBuf,
        /// CSV with event_id,outcome_index; empty, "-" or "unsettled" for open events.
        outcomes: PathBuf,
    },
    /// Simulate games between a correct and an incorrect model.
    Simulate {
        #[arg(long, value_enum, default_value_t = ScenarioKind::Fixed)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 0.5)]
        true_p: f64,
        /// Point probability of the incorrect fixed model.
        #[arg(long, default_value_t = 0.53)]
        wrong_p: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Points after which to report mean credibility.
        #[arg(long, value_delimiter = ',', default_value = "0,10,25,50,100")]
        checkpoints: Vec<usize>,
    },
    /// Iterated contests over a grid of fixed models.
    Grid {
        #[arg(long, default_value_t = 0.45)]
        min: f64,
        #[arg(long, default_value_t = 0.55)]
        max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 50)]
        games: usize,
        /// Games after which to compare the metrics.
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,25,50")]
        checkpoints: Vec<usize>,
        /// Run only this CORRECT:INCORRECT pair instead of the grid; repeatable.
        #[arg(long, value_parser = parse_pair, value_name = "CORRECT:INCORRECT")]
        pair: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Fixed,
    Recency,
    RandomWalk,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (c, i) = s.split_once(':').ok_or_else(|| format!("expected CORRECT:INCORRECT, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad probability {v:?}"));
    Ok((num(c)?, num(i)?))
}

fn two_priors(priors: &Option<Vec<f64>>) -> anyhow::Result<Option<[f64; 2]>> {
    match priors {
        None => Ok(None),
        Some(p) => {
            let n = evaluate::normalize_priors(p, 2)?;
            Ok(Some([n[0], n[1]]))
        }
    }
}

/// Run a parsed command, writing the report to `out`.
pub fn execute(cli: &Cli, out: &mut impl Write) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Evaluate { stream, outcomes } => {
            let s = File::open(stream).with_context(|| format!("opening {}", stream.display()))?;
            let o = File::open(outcomes).with_context(|| format!("opening {}", outcomes.display()))?;
            let stream_data = evaluate::read_stream(s).with_context(|| stream.display().to_string())?;
            let outcome_data = evaluate::read_outcomes(o).with_context(|| outcomes.display().to_string())?;
            let report = evaluate::evaluate(&stream_data, &outcome_data, g.priors.as_deref(), g.sequential)?;
            if let Some(path) = &g.trace_out {
                output::evaluation_trace(&report, path)?;
            }
            let text = if g.json { output::to_json(&report)? } else { output::evaluation_text(&report) };
            output::emit(out, &text)
        }
        Command::Simulate { scenario, true_p, wrong_p, reps, checkpoints } => {
            if *reps == 0 {
                bail!("--reps must be positive");
            }
            let sc = match scenario {
                ScenarioKind::Fixed => Scenario::fixed(*true_p, *wrong_p),
                ScenarioKind::Recency => Scenario::recency(*true_p),
                ScenarioKind::RandomWalk => Scenario::random_walk(*true_p),
            };
            let mut options = StudyOptions::new(*reps, g.seed).with_checkpoints(checkpoints);
            options.priors = two_priors(&g.priors)?;
            let report = run_study(&sc, &options)?;
            if let Some(path) = &g.trace_out {
                output::study_trace(&report, path)?;
            }
            let text = if g.json { output::to_json(&report)? } else { output::study_text(&report) };
            output::emit(out, &text)
        }
        Command::Grid { min, max, step, reps, games, checkpoints, pair } => {
            let mut config = if pair.is_empty() {
                GridConfig::new(GridConfig::range(*min, *max, *step)?)
            } else {
                GridConfig::with_pairs(pair.clone())
            };
            config.replications = *reps;
            config.games_per_sequence = *games;
            config.checkpoints = checkpoints.clone();
            config.seed = g.seed;
            if let Some(p) = two_priors(&g.priors)? {
                config.priors = p;
            }
            let report = run_iterated_grid(&config)?;
            if let Some(path) = &g.trace_out {
                output::grid_trace(&report, path)?;
            }
            let text = if g.json { output::to_json(&report)? } else { output::grid_text(&report) };
            output::emit(out, &text)
        }
    }
}

/// Entry point for the binary.
pub fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    execute(&cli, &mut lock)
}
