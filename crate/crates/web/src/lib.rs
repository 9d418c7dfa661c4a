//! WebAssembly bindings for the browser demo.
//!
//! Every export takes plain numbers or a JSON string and returns JSON, so the
//! page needs nothing beyond `JSON.parse`.

use kelly_market::binary::{apply_round, settle};
use kelly_market::sim::{replication_rng, simulate_game, GameRules, Scenario, WinProbTable};
use kelly_market::BinaryBettorState;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
struct ReplayInput {
    /// One row per round, one estimate per bettor.
    rounds: Vec<Vec<f64>>,
    bankrolls: Vec<f64>,
    event_occurred: bool,
}

#[derive(Debug, Serialize)]
struct ReplayRound {
    market: f64,
    bankrolls: Vec<f64>,
    win_shares: Vec<f64>,
    credibilities: Vec<f64>,
    bets: Vec<f64>,
    win_share_deltas: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Replay {
    rounds: Vec<ReplayRound>,
    final_bankrolls: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Surface {
    p: f64,
    step: u32,
    scores: Vec<u32>,
    /// `win[a][b]`: chance team A wins from a–b; null once the game is over.
    win: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize)]
struct GameTrace {
    team_a_won: bool,
    points_played: usize,
    model_probs: Vec<Vec<f64>>,
    market_probs: Vec<f64>,
    credibility_correct: Vec<f64>,
    final_bankrolls: Vec<f64>,
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

pub fn replay_json(input: &str) -> Result<String, String> {
    let input: ReplayInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let mut states = input
        .bankrolls
        .iter()
        .map(|&b| BinaryBettorState::new(b, 0.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut rounds = Vec::with_capacity(input.rounds.len());
    for probs in &input.rounds {
        let r = apply_round(probs, &states).map_err(|e| e.to_string())?;
        rounds.push(ReplayRound {
            market: r.market_probability,
            bankrolls: states.iter().map(|s| s.bankroll).collect(),
            win_shares: states.iter().map(|s| s.win_shares).collect(),
            credibilities: r.credibilities,
            bets: r.bet_amounts,
            win_share_deltas: r.win_share_deltas,
        });
        states = r.updated_states;
    }
    let final_bankrolls = settle(&states, input.event_occurred).map_err(|e| e.to_string())?;
    serde_json::to_string(&Replay { rounds, final_bankrolls }).map_err(|e| e.to_string())
}

pub fn surface_json(p: f64, step: u32) -> Result<String, String> {
    let rules = GameRules::default();
    let table = WinProbTable::new(p, rules).map_err(|e| e.to_string())?;
    let step = step.clamp(1, rules.target_points);
    let scores: Vec<u32> = (0..rules.target_points).step_by(step as usize).collect();
    let win = scores
        .iter()
        .map(|&a| scores.iter().map(|&b| table.get(a, b).ok()).collect())
        .collect();
    serde_json::to_string(&Surface { p, step, scores, win }).map_err(|e| e.to_string())
}

pub fn game_json(scenario: &str, true_p: f64, wrong_p: f64, seed: u64) -> Result<String, String> {
    let sc = match scenario {
        "fixed" => Scenario::fixed(true_p, wrong_p),
        "recency" => Scenario::recency(true_p),
        "random-walk" => Scenario::random_walk(true_p),
        other => return Err(format!("unknown scenario {other:?}")),
    };
    let config = sc.contest_config(1, seed);
    let r = simulate_game(&config, 0, &mut replication_rng(seed, 0)).map_err(|e| e.to_string())?;
    let trace = GameTrace {
        team_a_won: r.team_a_won,
        points_played: r.points_played,
        model_probs: r.model_probs,
        market_probs: r.market_probs,
        credibility_correct: r.credibilities.iter().map(|c| c[0]).collect(),
        final_bankrolls: r.final_bankrolls,
    };
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}

/// Replay a binary market. `input` is
/// `{"rounds": [[p, ...], ...], "bankrolls": [...], "event_occurred": bool}`.
#[wasm_bindgen]
pub fn replay_binary(input: &str) -> Result<String, JsError> {
    replay_json(input).map_err(err)
}

/// Team A's win probability over a grid of scores, every `step` points.
#[wasm_bindgen]
pub fn win_surface(p: f64, step: u32) -> Result<String, JsError> {
    surface_json(p, step).map_err(err)
}

/// One simulated game between the correct and the incorrect model.
#[wasm_bindgen]
pub fn simulate_one_game(scenario: &str, true_p: f64, wrong_p: f64, seed: u32) -> Result<String, JsError> {
    game_json(scenario, true_p, wrong_p, seed as u64).map_err(err)
}
