//! Replaying recorded forecast streams through the market.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use crate::multinomial::{marked_to_market, settle_multinomial, step_market};
use crate::position::{MarketState, PositionMatrix};
use crate::scoring::{brier_score, compare_models, log_loss, ForecastTrace, MetricWinners};
use crate::simplex::{validate_simplex, ProbabilitySimplex};

/// One row of a forecast stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastStreamRecord {
    pub event_id: String,
    pub step: u64,
    pub model_id: String,
    pub outcome_probs: ProbabilitySimplex,
    pub line: u64,
}

/// Parsed stream: events in file order, each a map of step to records.
#[derive(Debug, Clone, Default)]
pub struct ForecastStream {
    pub models: Vec<String>,
    pub events: Vec<(String, BTreeMap<u64, Vec<ForecastStreamRecord>>)>,
}

/// Read `event_id,step,model_id,p_0[,p_1,...]` (or a single binary `p`).
pub fn read_stream<R: Read>(input: R) -> anyhow::Result<ForecastStream> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().context("reading stream header")?.clone();
    let fixed = ["event_id", "step", "model_id"];
    if headers.len() < 4 || headers.iter().take(3).ne(fixed.iter().copied()) {
        bail!("line 1: stream header must start with event_id,step,model_id, got {:?}", headers.iter().collect::<Vec<_>>());
    }
    let prob_cols: Vec<&str> = headers.iter().skip(3).collect();
    let binary = prob_cols == ["p"];
    if !binary {
        for (i, h) in prob_cols.iter().enumerate() {
            if *h != format!("p_{i}") {
                bail!("line 1: expected column p_{i}, got {h:?}");
            }
        }
    }

    let mut stream = ForecastStream::default();
    let mut event_index: HashMap<String, usize> = HashMap::new();
    for row in reader.records() {
        let row = row.context("reading stream")?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let step: u64 = field(1).parse().map_err(|_| anyhow!("line {line}: bad step {:?}", field(1)))?;
        let raw = (3..row.len())
            .map(|i| field(i).parse::<f64>().map_err(|_| anyhow!("line {line}: bad probability {:?}", field(i))))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        let raw = if binary { vec![raw[0], 1.0 - raw[0]] } else { raw };
        check_sum(&raw).map_err(|e| anyhow!("line {line}: {e}"))?;
        let outcome_probs = validate_simplex(&raw).map_err(|e| anyhow!("line {line}: {e}"))?;
        let record = ForecastStreamRecord {
            event_id: field(0).to_string(),
            step,
            model_id: field(2).to_string(),
            outcome_probs,
            line,
        };
        if record.event_id.is_empty() || record.model_id.is_empty() {
            bail!("line {line}: empty event_id or model_id");
        }
        if !stream.models.contains(&record.model_id) {
            stream.models.push(record.model_id.clone());
        }
        let idx = *event_index.entry(record.event_id.clone()).or_insert_with(|| {
            stream.events.push((record.event_id.clone(), BTreeMap::new()));
            stream.events.len() - 1
        });
        stream.events[idx].1.entry(step).or_default().push(record);
    }
    if stream.events.is_empty() {
        bail!("stream has no rows");
    }
    Ok(stream)
}

/// Stream rows must already be probabilities; clamping handles zeros only.
fn check_sum(raw: &[f64]) -> Result<(), String> {
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(format!("probabilities sum to {total}"));
    }
    Ok(())
}

/// Outcome per event; `None` marks an unsettled event.
pub fn read_outcomes<R: Read>(input: R) -> anyhow::Result<HashMap<String, Option<usize>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input);
    let headers = reader.headers().context("reading outcomes header")?.clone();
    if headers.iter().take(2).ne(["event_id", "outcome_index"]) {
        bail!("line 1: outcomes header must be event_id,outcome_index");
    }
    let mut out = HashMap::new();
    for row in reader.records() {
        let row = row.context("reading outcomes")?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let id = row.get(0).unwrap_or("").to_string();
        let value = row.get(1).unwrap_or("");
        let outcome = match value {
            "" | "-" | "unsettled" => None,
            v => Some(v.parse::<usize>().map_err(|_| anyhow!("line {line}: bad outcome_index {v:?}"))?),
        };
        if id.is_empty() {
            bail!("line {line}: empty event_id");
        }
        if out.insert(id.clone(), outcome).is_some() {
            bail!("line {line}: duplicate outcome for event {id}");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u64,
    pub market_probs: Vec<f64>,
    /// Marked-to-market value of each model's positions at this step's prices.
    pub credibilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub event_id: String,
    pub outcomes: usize,
    pub outcome: Option<usize>,
    pub starting_bankrolls: Vec<f64>,
    pub steps: Vec<StepReport>,
    /// Settled bankrolls, or marked-to-market values for an unsettled event.
    pub final_credibilities: Vec<f64>,
    pub log_loss: Option<Vec<f64>>,
    pub brier: Option<Vec<f64>>,
    pub winners: Option<MetricWinners>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub models: Vec<String>,
    pub sequential: bool,
    pub priors: Vec<f64>,
    pub events: Vec<EventReport>,
}

pub fn evaluate(
    stream: &ForecastStream,
    outcomes: &HashMap<String, Option<usize>>,
    priors: Option<&[f64]>,
    sequential: bool,
) -> anyhow::Result<EvaluationReport> {
    let k = stream.models.len();
    if k < 2 {
        bail!("need at least two models, found {k}");
    }
    let priors = match priors {
        Some(p) => normalize_priors(p, k)?,
        None => vec![1.0 / k as f64; k],
    };
    let mut bankrolls = priors.clone();
    let mut events = Vec::with_capacity(stream.events.len());
    for (event_id, steps) in &stream.events {
        let outcome = *outcomes.get(event_id).ok_or_else(|| anyhow!("no outcome for event {event_id}"))?;
        let start = if sequential { bankrolls.clone() } else { priors.clone() };
        let report = evaluate_event(event_id, steps, &stream.models, outcome, &start)?;
        bankrolls = report.final_credibilities.clone();
        events.push(report);
    }
    Ok(EvaluationReport { models: stream.models.clone(), sequential, priors, events })
}

pub fn normalize_priors(p: &[f64], models: usize) -> anyhow::Result<Vec<f64>> {
    if p.len() != models {
        bail!("{} priors for {models} models", p.len());
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(total > 0.0) {
        bail!("priors must be nonnegative with a positive sum: {p:?}");
    }
    Ok(p.iter().map(|v| v / total).collect())
}

fn evaluate_event(
    event_id: &str,
    steps: &BTreeMap<u64, Vec<ForecastStreamRecord>>,
    models: &[String],
    outcome: Option<usize>,
    start: &[f64],
) -> anyhow::Result<EventReport> {
    let ctx = |e: crate::MarketError| anyhow!("event {event_id}: {e}");
    let mut per_step: Vec<(u64, Vec<ProbabilitySimplex>)> = Vec::with_capacity(steps.len());
    for (&step, records) in steps {
        let mut row: Vec<Option<ProbabilitySimplex>> = vec![None; models.len()];
        for r in records {
            let j = models.iter().position(|m| *m == r.model_id).expect("model collected while reading");
            if row[j].is_some() {
                bail!("line {}: model {} appears twice at step {step} of event {event_id}", r.line, r.model_id);
            }
            row[j] = Some(r.outcome_probs.clone());
        }
        let missing: Vec<&str> =
            models.iter().zip(&row).filter(|(_, p)| p.is_none()).map(|(m, _)| m.as_str()).collect();
        if !missing.is_empty() {
            bail!("event {event_id} step {step}: inconsistent model set, missing {}", missing.join(", "));
        }
        per_step.push((step, row.into_iter().map(Option::unwrap).collect()));
    }
    let outcomes = per_step[0].1[0].len();
    if per_step.iter().any(|(_, row)| row.iter().any(|p| p.len() != outcomes)) {
        bail!("event {event_id}: forecasts disagree on the number of outcomes");
    }
    if let Some(o) = outcome {
        if o >= outcomes {
            bail!("event {event_id}: outcome {o} out of range for {outcomes} outcomes");
        }
    }

    let positions = PositionMatrix::flat(outcomes, start).map_err(ctx)?;
    let mut state = MarketState::new(positions, &per_step[0].1, 0).map_err(ctx)?;
    let mut reports = Vec::with_capacity(per_step.len());
    let mut last_prices = None;
    for (step, estimates) in &per_step {
        let (next, clearing) = step_market(&state, estimates).map_err(ctx)?;
        reports.push(StepReport {
            step: *step,
            market_probs: clearing.market_probs.as_slice().to_vec(),
            credibilities: clearing.credibilities.clone(),
        });
        last_prices = Some(clearing.market_probs);
        state = next;
    }

    let (final_credibilities, log_loss_v, brier_v, winners) = match outcome {
        Some(o) => {
            let settled = settle_multinomial(&state, o).map_err(ctx)?;
            let trace = ForecastTrace::new(per_step.iter().map(|(_, r)| r.clone()).collect(), o).map_err(ctx)?;
            let ll = (0..models.len()).map(|j| log_loss(&trace, j)).collect::<Result<Vec<_>, _>>().map_err(ctx)?;
            let br = (0..models.len()).map(|j| brier_score(&trace, j)).collect::<Result<Vec<_>, _>>().map_err(ctx)?;
            let w = compare_models(&trace, &settled).map_err(ctx)?;
            (settled, Some(ll), Some(br), Some(w))
        }
        None => {
            let prices = last_prices.expect("event has at least one step");
            let mtm = (0..models.len()).map(|j| marked_to_market(&state.positions().column(j), &prices)).collect();
            (mtm, None, None, None)
        }
    };
    let total: f64 = final_credibilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!("event {event_id}: invariant violated, final credibilities sum to {total}");
    }
    Ok(EventReport {
        event_id: event_id.to_string(),
        outcomes,
        outcome,
        starting_bankrolls: start.to_vec(),
        steps: reports,
        final_credibilities,
        log_loss: log_loss_v,
        brier: brier_v,
        winners,
    })
}
