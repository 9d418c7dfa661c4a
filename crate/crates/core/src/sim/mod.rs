//! Simulated games between forecasting models, and the studies built on them.

pub mod contest;
pub mod game;
pub mod models;
pub mod rng;
pub mod study;

pub use contest::{simulate_game, simulate_sequence, Contest, ContestConfig, ContestRecord, GameSummary};
pub use game::{true_win_prob, win_prob_series, GameRules, WinProbCache, WinProbTable};
pub use models::{model_point_prob, ModelKind, ModelSpec, ModelState, RecencyWarmup};
pub use rng::{grid_stream, replication_rng};
pub use study::{
    credibility_trace, run_iterated_grid, run_single_round_study, run_study, AccuracyTable, CheckpointCredibility,
    GridCell, GridCheckpoint, GridConfig, GridReport, GridSummary, MetricTally, Scenario, StudyOptions, StudyReport,
};
