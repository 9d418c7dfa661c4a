//! Exact win probabilities for a race-to-`target` game that must be won by
//! `win_by` points, when every point is an independent coin flip.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameRules {
    pub target_points: u32,
    pub win_by: u32,
}

impl Default for GameRules {
    fn default() -> Self {
        Self { target_points: 100, win_by: 2 }
    }
}

impl GameRules {
    pub fn new(target_points: u32, win_by: u32) -> Result<Self> {
        if target_points == 0 || win_by == 0 {
            return Err(MarketError::InvalidInput("target_points and win_by must be at least 1".into()));
        }
        Ok(Self { target_points, win_by })
    }

    /// `Some(true)` if team A has won, `Some(false)` if team B has, else `None`.
    pub fn winner(&self, score_a: u32, score_b: u32) -> Option<bool> {
        let (t, k) = (self.target_points, self.win_by);
        if score_a >= t && score_a >= score_b + k {
            Some(true)
        } else if score_b >= t && score_b >= score_a + k {
            Some(false)
        } else {
            None
        }
    }

    pub fn is_over(&self, score_a: u32, score_b: u32) -> bool {
        self.winner(score_a, score_b).is_some()
    }

    /// Score at or above which both teams are in "overtime": from there on
    /// only the lead matters, since whoever gets `win_by` ahead is past the target.
    fn overtime_floor(&self) -> i64 {
        self.target_points as i64 - self.win_by as i64
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MarketError::InvalidInput(format!("point probability {p} outside (0, 1)")));
    }
    Ok(())
}

/// Chance that A gets `win_by` ahead before B does, starting from lead `lead`.
/// Gambler's ruin between absorbing barriers at `±win_by`.
fn overtime_win_prob(lead: i64, p: f64, win_by: u32) -> f64 {
    let k = win_by as i64;
    if lead >= k {
        return 1.0;
    }
    if lead <= -k {
        return 0.0;
    }
    let r = (1.0 - p) / p;
    if (r - 1.0).abs() < 1e-12 {
        return (lead + k) as f64 / (2 * k) as f64;
    }
    // (1 - r^(lead+k)) / (1 - r^(2k)), rewritten in the ratio below 1 for stability.
    if r < 1.0 {
        (1.0 - r.powi((lead + k) as i32)) / (1.0 - r.powi((2 * k) as i32))
    } else {
        let s = 1.0 / r;
        (s.powi((k - lead) as i32) - s.powi((2 * k) as i32)) / (1.0 - s.powi((2 * k) as i32))
    }
}

/// Memo of A's win probability over every undecided state before overtime,
/// filled by the recursion `W(a, b) = p W(a + 1, b) + (1 - p) W(a, b + 1)`.
#[derive(Debug, Clone)]
pub struct WinProbTable {
    rules: GameRules,
    p: f64,
    side: usize,
    values: Vec<f64>,
}

impl WinProbTable {
    pub fn new(p: f64, rules: GameRules) -> Result<Self> {
        check_p(p)?;
        let side = rules.target_points as usize;
        let mut table = Self { rules, p, side, values: vec![f64::NAN; side * side] };
        for a in (0..side).rev() {
            for b in (0..side).rev() {
                let (a32, b32) = (a as u32, b as u32);
                if table.is_overtime(a32, b32) || rules.is_over(a32, b32) {
                    continue;
                }
                let up = table.lookup(a32 + 1, b32);
                let down = table.lookup(a32, b32 + 1);
                table.values[a * side + b] = p * up + (1.0 - p) * down;
            }
        }
        Ok(table)
    }

    pub fn point_prob(&self) -> f64 {
        self.p
    }

    pub fn rules(&self) -> GameRules {
        self.rules
    }

    fn is_overtime(&self, a: u32, b: u32) -> bool {
        a.min(b) as i64 >= self.rules.overtime_floor()
    }

    fn lookup(&self, a: u32, b: u32) -> f64 {
        if let Some(won) = self.rules.winner(a, b) {
            return if won { 1.0 } else { 0.0 };
        }
        if self.is_overtime(a, b) {
            return overtime_win_prob(a as i64 - b as i64, self.p, self.rules.win_by);
        }
        // Undecided and outside overtime implies both scores are below the target.
        self.values[a as usize * self.side + b as usize]
    }

    /// A's chance of winning from `score_a`–`score_b`.
    pub fn get(&self, score_a: u32, score_b: u32) -> Result<f64> {
        if self.rules.is_over(score_a, score_b) {
            return Err(MarketError::GameOver { score_a, score_b });
        }
        Ok(self.lookup(score_a, score_b))
    }
}

/// Exact probability that team A wins from `score_a`–`score_b` when it takes
/// each point with probability `p`.
pub fn true_win_prob(score_a: u32, score_b: u32, p: f64, rules: GameRules) -> Result<f64> {
    check_p(p)?;
    if rules.is_over(score_a, score_b) {
        return Err(MarketError::GameOver { score_a, score_b });
    }
    WinProbTable::new(p, rules)?.get(score_a, score_b)
}

/// `ln C(n, k)`.
fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `Σ_{j=0}^{count-1} C(need - 1 + j, j) x^need y^j`: probability that one side
/// collects `need` points while the other collects fewer than `count`.
fn negative_binomial_mass(need: u64, count: i64, x: f64, y: f64) -> f64 {
    if count <= 0 {
        return 0.0;
    }
    let (ln_x, ln_y) = (x.ln(), y.ln());
    let mut ln_term = need as f64 * ln_x;
    let mut total = ln_term.exp();
    for j in 0..(count as u64 - 1) {
        ln_term += ((need + j) as f64 / (j + 1) as f64).ln() + ln_y;
        total += ln_term.exp();
    }
    total
}

/// Same quantity as [`true_win_prob`] in closed form, `O(target)` per call.
///
/// Splits every path at the first moment both teams reach the overtime
/// floor: either A reaches the target before B reaches the floor, or
/// overtime starts at a known lead and the gambler's-ruin formula finishes it.
pub fn win_prob_series(score_a: u32, score_b: u32, p: f64, rules: GameRules) -> Result<f64> {
    check_p(p)?;
    if rules.is_over(score_a, score_b) {
        return Err(MarketError::GameOver { score_a, score_b });
    }
    let floor = rules.overtime_floor();
    let (a, b) = (score_a as i64, score_b as i64);
    if a.min(b) >= floor {
        return Ok(overtime_win_prob(a - b, p, rules.win_by));
    }
    let q = 1.0 - p;
    let target = rules.target_points as i64;
    let top = target - 1;

    // A reaches the target while B is still short of the floor.
    let mut total = if a < target { negative_binomial_mass((target - a) as u64, floor - b, p, q) } else { 0.0 };

    // B's point brings B to the floor with A already at x >= floor.
    if b < floor {
        let need = (floor - b) as u64;
        for x in a.max(floor)..=top {
            let gained = (x - a) as u64;
            let ln_path = ln_choose(need - 1 + gained, gained) + need as f64 * q.ln() + gained as f64 * p.ln();
            total += ln_path.exp() * overtime_win_prob(x - floor, p, rules.win_by);
        }
    }
    // A's point brings A to the floor with B already at y >= floor.
    if a < floor {
        let need = (floor - a) as u64;
        for y in b.max(floor)..=top {
            let gained = (y - b) as u64;
            let ln_path = ln_choose(need - 1 + gained, gained) + need as f64 * p.ln() + gained as f64 * q.ln();
            total += ln_path.exp() * overtime_win_prob(floor - y, p, rules.win_by);
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Win-probability lookups for many point probabilities under one rule set:
/// DP tables for the probabilities registered up front, the closed-form
/// series for anything else.
#[derive(Debug, Clone)]
pub struct WinProbCache {
    rules: GameRules,
    tables: HashMap<u64, WinProbTable>,
}

impl WinProbCache {
    pub fn new(rules: GameRules, probs: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut tables = HashMap::new();
        for p in probs {
            if let std::collections::hash_map::Entry::Vacant(e) = tables.entry(p.to_bits()) {
                e.insert(WinProbTable::new(p, rules)?);
            }
        }
        Ok(Self { rules, tables })
    }

    pub fn rules(&self) -> GameRules {
        self.rules
    }

    pub fn win_prob(&self, score_a: u32, score_b: u32, p: f64) -> Result<f64> {
        match self.tables.get(&p.to_bits()) {
            Some(t) => t.get(score_a, score_b),
            None => win_prob_series(score_a, score_b, p, self.rules),
        }
    }
}
