//! Forecasters for the simulated game. Each one holds a belief about the
//! chance that team A wins a point and turns it into a win probability with
//! the exact game DP.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Constant point probability.
    Fixed,
    /// Blends the base probability with team A's share of recent points.
    Recency,
    /// Drifts by uniform noise after every point, clipped to a band.
    RandomWalk,
}

/// How a recency model fills a window that is not full yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecencyWarmup {
    /// Share of the points played so far; base probability before any.
    AvailableHistory,
    /// Missing points count as won by A at the base rate.
    #[default]
    PadWithBase,
    /// Base probability until the window is full.
    WaitForFullWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub base_point_prob: f64,
    pub recency_window: usize,
    pub recency_weight: f64,
    pub recency_warmup: RecencyWarmup,
    pub walk_scale: f64,
    pub walk_bounds: (f64, f64),
}

impl ModelSpec {
    pub fn fixed(p: f64) -> Self {
        Self { kind: ModelKind::Fixed, ..Self::base(p) }
    }

    /// `(1 - weight) * base + weight * (share of the last `window` points won by A)`,
    /// with the defaults window = 10, weight = 0.10.
    pub fn recency(base: f64) -> Self {
        Self { kind: ModelKind::Recency, ..Self::base(base) }
    }

    /// Starts at `base`, then moves by `(U(0,1) - 0.5) / 35` per point inside [0.40, 0.60].
    pub fn random_walk(base: f64) -> Self {
        Self { kind: ModelKind::RandomWalk, ..Self::base(base) }
    }

    fn base(p: f64) -> Self {
        Self {
            kind: ModelKind::Fixed,
            base_point_prob: p,
            recency_window: 10,
            recency_weight: 0.10,
            recency_warmup: RecencyWarmup::default(),
            walk_scale: 35.0,
            walk_bounds: (0.40, 0.60),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(MarketError::InvalidInput(format!("model {what}: {self:?}")));
        if !(self.base_point_prob > 0.0 && self.base_point_prob < 1.0) {
            return bad("base point probability outside (0, 1)");
        }
        match self.kind {
            ModelKind::Fixed => {}
            ModelKind::Recency => {
                if self.recency_window == 0 || !(0.0..=1.0).contains(&self.recency_weight) {
                    return bad("needs window >= 1 and weight in [0, 1]");
                }
            }
            ModelKind::RandomWalk => {
                let (lo, hi) = self.walk_bounds;
                if !(self.walk_scale > 0.0 && self.walk_scale.is_finite()) || !(0.0 < lo && lo <= hi && hi < 1.0) {
                    return bad("needs a positive scale and bounds inside (0, 1)");
                }
            }
        }
        Ok(())
    }

    /// Every point probability a recency model can produce, so win tables
    /// can be built ahead of time.
    pub fn reachable_point_probs(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::Fixed => vec![self.base_point_prob],
            ModelKind::Recency => {
                let mut out = vec![self.base_point_prob];
                let w = self.recency_window;
                for n in 1..=w {
                    for k in 0..=n {
                        out.push(self.recency_blend(k as f64, n));
                        out.push(self.recency_blend(k as f64 + (w - n) as f64 * self.base_point_prob, w));
                    }
                }
                out
            }
            ModelKind::RandomWalk => vec![self.base_point_prob],
        }
    }

    fn recency_blend(&self, won: f64, seen: usize) -> f64 {
        (1.0 - self.recency_weight) * self.base_point_prob + self.recency_weight * (won / seen as f64)
    }
}

/// A forecaster during one game.
#[derive(Debug, Clone)]
pub struct ModelState {
    spec: ModelSpec,
    walk: f64,
}

impl ModelState {
    pub fn new(spec: ModelSpec) -> Self {
        Self { spec, walk: spec.base_point_prob }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Point probability for the next point. `history[i]` is true when team A
    /// won point `i`.
    pub fn point_prob(&self, history: &[bool]) -> f64 {
        match self.spec.kind {
            ModelKind::Fixed => self.spec.base_point_prob,
            ModelKind::Recency => {
                let w = self.spec.recency_window;
                let seen = history.len().min(w);
                let won = history[history.len() - seen..].iter().filter(|&&a| a).count() as f64;
                match self.spec.recency_warmup {
                    _ if seen == w => self.spec.recency_blend(won, w),
                    RecencyWarmup::AvailableHistory if seen > 0 => self.spec.recency_blend(won, seen),
                    RecencyWarmup::PadWithBase => {
                        self.spec.recency_blend(won + (w - seen) as f64 * self.spec.base_point_prob, w)
                    }
                    _ => self.spec.base_point_prob,
                }
            }
            ModelKind::RandomWalk => self.walk,
        }
    }

    /// Update after a point has been played.
    pub fn observe<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.spec.kind == ModelKind::RandomWalk {
            let step = (rng.random::<f64>() - 0.5) / self.spec.walk_scale;
            let (lo, hi) = self.spec.walk_bounds;
            self.walk = (self.walk + step).clamp(lo, hi);
        }
    }
}

/// Point probability a model assigns given the points so far; for the random
/// walk, `previous` is its last value and one step is taken first.
pub fn model_point_prob<R: Rng + ?Sized>(spec: &ModelSpec, history: &[bool], previous: Option<f64>, rng: &mut R) -> f64 {
    let mut state = ModelState::new(*spec);
    if let Some(prev) = previous {
        state.walk = prev;
        state.observe(rng);
    }
    state.point_prob(history)
}
