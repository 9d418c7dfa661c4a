//! Evaluate competing time-updating probabilistic forecasts by letting them
//! bet against each other as Kelly bettors.
//!
//! Each model holds a bankroll that doubles as its credibility. Every round
//! the market clears at the unique odds where all Kelly bets are matched;
//! the market probability is the consensus forecast and the marked-to-market
//! bankrolls are real-time model credibilities.
//!
//! - [`binary`]: two-outcome markets in bankroll + win-shares form.
//! - [`multinomial`]: any number of outcomes, cleared as an eigenvector.
//! - [`scoring`]: log-loss and Brier baselines.
//! - [`sim`]: the point-by-point game study comparing all three metrics.

pub mod binary;
pub mod error;
pub mod multinomial;
pub mod position;
pub mod scoring;
pub mod sim;
pub mod simplex;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{MarketError, Result};
pub use position::{binary_to_positions, positions_to_binary, BinaryBettorState, MarketState, PositionMatrix};
pub use simplex::{validate_simplex, ProbabilitySimplex, EPSILON_CLAMP};
