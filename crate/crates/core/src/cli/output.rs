//! Report rendering: text tables, JSON and plot-ready CSV.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::cli::evaluate::EvaluationReport;
use crate::scoring::Winner;
use crate::sim::{GridReport, StudyReport};

/// Round to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(report: &T) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(report)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn num(x: f64) -> String {
    round_sig(x).to_string()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn winner(w: Winner, models: &[String]) -> String {
    match w {
        Winner::Model(i) => models[i].clone(),
        Winner::Tie => "tie".into(),
    }
}

pub fn evaluation_text(r: &EvaluationReport) -> String {
    let mut s = String::new();
    let models = &r.models;
    for e in &r.events {
        let status = match e.outcome {
            Some(o) => format!("outcome {o}"),
            None => "unsettled".into(),
        };
        let _ = writeln!(s, "event {} ({} outcomes, {status})", e.event_id, e.outcomes);
        let _ = writeln!(s, "  start   {}", e.starting_bankrolls.iter().map(|b| pct(*b)).collect::<Vec<_>>().join("  "));
        let _ = write!(s, "  {:>6}  {:<24}", "step", "market");
        for m in models {
            let _ = write!(s, "  {m:>10}");
        }
        s.push('\n');
        for st in &e.steps {
            let market = st.market_probs.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" ");
            let _ = write!(s, "  {:>6}  {market:<24}", st.step);
            for c in &st.credibilities {
                let _ = write!(s, "  {:>10}", pct(*c));
            }
            s.push('\n');
        }
        let label = if e.outcome.is_some() { "final" } else { "marked" };
        let _ = write!(s, "  {label:>6}  {:<24}", "");
        for c in &e.final_credibilities {
            let _ = write!(s, "  {:>10}", pct(*c));
        }
        s.push('\n');
        if let (Some(ll), Some(br), Some(w)) = (&e.log_loss, &e.brier, &e.winners) {
            for (name, v) in [("log loss", ll), ("brier", br)] {
                let _ = write!(s, "  {name:>8}  {:<22}", "");
                for x in v {
                    let _ = write!(s, "  {x:>10.6}");
                }
                s.push('\n');
            }
            let _ = writeln!(
                s,
                "  best: kelly {}, log loss {}, brier {}",
                winner(w.kelly, models),
                winner(w.log_loss, models),
                winner(w.brier, models)
            );
        }
        s.push('\n');
    }
    s
}

pub fn study_text(r: &StudyReport) -> String {
    let mut s = String::new();
    let a = &r.accuracy;
    let _ = writeln!(s, "scenario  {}", r.scenario.name);
    let _ = writeln!(s, "seed      {}", r.seed);
    let _ = writeln!(s, "games     {} (mean {:.1} points)", a.replications, r.mean_points_played);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<20} {:>9} {:>9} {:>7} {:>9}", "metric", "accuracy", "correct", "ties", "wrong");
    for (name, t) in [("Kelly bankroll", a.kelly), ("Average log loss", a.log_loss), ("Average Brier score", a.brier)] {
        let _ = writeln!(s, "{name:<20} {:>9} {:>9} {:>7} {:>9}", pct(t.accuracy), t.correct, t.tied, t.incorrect);
    }
    if !r.credibility.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>6} {:>10} {:>10}", "point", "correct", "incorrect");
        for c in &r.credibility {
            let _ = writeln!(s, "{:>6} {:>10} {:>10}", c.points, pct(c.mean[0]), pct(c.mean[1]));
        }
    }
    s
}

pub fn grid_text(r: &GridReport) -> String {
    let mut s = String::new();
    let probs = &r.config.probs;
    let _ = writeln!(
        s,
        "{} scenarios, {} replications of {} games, seed {}",
        r.checkpoints.first().map_or(0, |c| c.summary.total),
        r.config.replications,
        r.config.games_per_sequence,
        r.config.seed
    );
    for cp in &r.checkpoints {
        let sm = cp.summary;
        let share = |n: usize| if sm.total == 0 { 0.0 } else { n as f64 / sm.total as f64 };
        let _ = writeln!(s, "\nafter {} game{}", cp.games, if cp.games == 1 { "" } else { "s" });
        let _ = writeln!(s, "  {:<7} {:>4} {:>5}", "Kelly", sm.kelly_wins, format!("{:.0}%", 100.0 * share(sm.kelly_wins)));
        let _ = writeln!(s, "  {:<7} {:>4} {:>5}", "Tie", sm.ties, format!("{:.0}%", 100.0 * share(sm.ties)));
        let _ = writeln!(s, "  {:<7} {:>4} {:>5}", "Other", sm.kelly_losses, format!("{:.0}%", 100.0 * share(sm.kelly_losses)));
        let _ = writeln!(s, "  {:<7} {:>4}", "Total", sm.total);
        let _ = write!(s, "\n  correct\\incorrect");
        for p in probs {
            let _ = write!(s, " {p:>5}");
        }
        s.push('\n');
        for c in probs {
            let _ = write!(s, "  {c:>17}");
            for i in probs {
                let label = cp
                    .cells
                    .iter()
                    .find(|cell| cell.correct_p == *c && cell.incorrect_p == *i)
                    .map_or("-", |cell| cell.label.as_str());
                let _ = write!(s, " {label:>5}");
            }
            s.push('\n');
        }
    }
    s
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per event, step and series.
pub fn evaluation_trace(r: &EvaluationReport, path: &Path) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for e in &r.events {
        for st in &e.steps {
            for (i, m) in st.market_probs.iter().enumerate() {
                rows.push(vec![e.event_id.clone(), st.step.to_string(), format!("market_p_{i}"), num(*m)]);
            }
            for (model, c) in r.models.iter().zip(&st.credibilities) {
                rows.push(vec![e.event_id.clone(), st.step.to_string(), format!("credibility_{model}"), num(*c)]);
            }
        }
        for (model, c) in r.models.iter().zip(&e.final_credibilities) {
            rows.push(vec![e.event_id.clone(), "final".into(), format!("credibility_{model}"), num(*c)]);
        }
    }
    write_csv(path, &["event_id", "step", "series", "value"], rows)
}

pub fn study_trace(r: &StudyReport, path: &Path) -> anyhow::Result<()> {
    let rows = r
        .credibility
        .iter()
        .map(|c| vec![c.points.to_string(), num(c.mean[0]), num(c.mean[1])])
        .collect();
    write_csv(path, &["point", "correct", "incorrect"], rows)
}

pub fn grid_trace(r: &GridReport, path: &Path) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for cp in &r.checkpoints {
        for c in &cp.cells {
            rows.push(vec![
                cp.games.to_string(),
                num(c.correct_p),
                num(c.incorrect_p),
                num(c.kelly.accuracy),
                num(c.log_loss.accuracy),
                num(c.brier.accuracy),
                c.label.clone(),
            ]);
        }
    }
    write_csv(path, &["games", "correct_p", "incorrect_p", "kelly", "log_loss", "brier", "label"], rows)
}

pub fn emit(out: &mut impl Write, text: &str) -> anyhow::Result<()> {
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    Ok(())
}
