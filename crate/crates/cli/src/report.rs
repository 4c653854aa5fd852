//! Text and structured (JSON) reports. JSON objects are built from
//! `serde_json::Value`, whose maps keep keys sorted, so identical runs
//! serialize identically.

use std::fmt::Write as _;

use cumac_core::baseline::{ComparisonReport, DenialRow, LEVEL_MAPPING};
use cumac_core::trace::{event_line, ReplayReport, Timing, Trace};
use cumac_core::Reason;
use serde_json::{json, Value};

/// Longest list printed in text reports; structured reports are complete.
const TEXT_LIST_LIMIT: usize = 20;

pub enum Source {
    File(String),
    Scenario(String),
    Generated { seed: u64, events: usize },
}

impl Source {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Source::Generated { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Source::File(path) => path.clone(),
            Source::Scenario(name) => format!("scenario {name}"),
            Source::Generated { seed, events } => format!("generated trace (seed {seed}, {events} events)"),
        }
    }
}

pub struct OracleRun {
    pub seed: u64,
    pub engine_taint: usize,
    pub oracle_taint: usize,
    pub denied: usize,
    pub matched: bool,
    pub error: Option<String>,
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("plain enums serialize")
}

/// "0 denied", "1 denied (PrivilegedOp)", "4 denied (IntegrityWrite 3, PrivilegedOp 1)".
pub fn denied_summary<'a>(by_reason: impl IntoIterator<Item = (&'a Reason, &'a usize)>) -> String {
    let parts: Vec<(Reason, usize)> = by_reason.into_iter().map(|(r, n)| (*r, *n)).collect();
    let total: usize = parts.iter().map(|(_, n)| n).sum();
    match parts.as_slice() {
        [] => "0 denied".to_string(),
        [(reason, _)] => format!("{total} denied ({reason})"),
        _ => {
            let detail: Vec<String> = parts.iter().map(|(r, n)| format!("{r} {n}")).collect();
            format!("{total} denied ({})", detail.join(", "))
        }
    }
}

fn timing_json(timing: &Timing, events: usize) -> Value {
    json!({
        "wall_ns": timing.wall_ns,
        "median_ns": timing.median_ns,
        "p99_ns": timing.p99_ns,
        "max_ns": timing.max_ns,
        "events_per_sec": timing.events_per_sec(events).round(),
    })
}

pub fn replay_text(command: &str, source: &Source, trace: &Trace, report: &ReplayReport, timing: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{command}: {} ({} events)", source.describe(), trace.events.len());
    let _ = writeln!(out, "{}", denied_summary(&report.counters.denied));
    let notable: Vec<String> = report
        .decisions
        .iter()
        .zip(&trace.events)
        .filter(|((_, d), _)| d.is_deny() || d.is_learned())
        .map(|((seq, d), event)| {
            let what = if d.is_deny() { "denied " } else { "learned" };
            let reason = d.reason.map(|r| r.to_string()).unwrap_or_default();
            format!("  {what} event {seq}: {} [{reason}]", event_line(&event.kind))
        })
        .collect();
    for line in notable.iter().take(TEXT_LIST_LIMIT) {
        let _ = writeln!(out, "{line}");
    }
    if notable.len() > TEXT_LIST_LIMIT {
        let _ = writeln!(out, "  ... {} more (see the structured report)", notable.len() - TEXT_LIST_LIMIT);
    }
    let c = &report.counters;
    let _ = writeln!(
        out,
        "allowed {}, allowed by exception {}, learned {} ({} new store entries)",
        c.allowed, c.allowed_by_exception, c.learned, report.learned_exceptions
    );
    let taint: Vec<String> = report
        .final_taint
        .iter()
        .take(TEXT_LIST_LIMIT)
        .map(ToString::to_string)
        .collect();
    let more = report.final_taint.len().saturating_sub(TEXT_LIST_LIMIT);
    let _ = match (taint.is_empty(), more) {
        (true, _) => writeln!(out, "tainted: none"),
        (false, 0) => writeln!(out, "tainted: {}", taint.join(" ")),
        (false, more) => writeln!(out, "tainted: {} ... {more} more", taint.join(" ")),
    };
    if timing {
        let t = &report.timing;
        let _ = writeln!(
            out,
            "timing: median {} ns/event, p99 {} ns, {:.0} events/s",
            t.median_ns,
            t.p99_ns,
            t.events_per_sec(trace.events.len())
        );
    }
    out
}

pub fn replay_json(command: &str, source: &Source, trace: &Trace, report: &ReplayReport, timing: bool) -> Value {
    let decisions: Vec<Value> = report
        .decisions
        .iter()
        .zip(&trace.events)
        .map(|((seq, d), event)| {
            json!({
                "seq": seq,
                "event": event_line(&event.kind),
                "verdict": to_value(d.verdict),
                "reason": d.reason.map(to_value),
                "exception": d.exception.map(to_value),
                "learned": d.is_learned(),
                "taint_updates": d.taint_updates.iter().map(|u| u.entity.to_string()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let denied_by_reason: serde_json::Map<String, Value> = report
        .counters
        .denied
        .iter()
        .map(|(r, n)| (r.to_string(), json!(n)))
        .collect();
    json!({
        "summary": {
            "command": command,
            "source": source.describe(),
            "mode": to_value(report.mode),
            "label": trace.snapshot.label.map(|l| l.as_str()),
            "seed": report.seed,
            "events": trace.events.len(),
            "allowed": report.counters.allowed,
            "denied": report.counters.denied_total(),
            "denied_by_reason": denied_by_reason,
            "allowed_by_exception": report.counters.allowed_by_exception,
            "learned": report.counters.learned,
            "learned_exceptions": report.learned_exceptions,
            "tainted": report.final_taint.len(),
        },
        "decisions": decisions,
        "taint": report.final_taint.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "timing": if timing { timing_json(&report.timing, trace.events.len()) } else { Value::Null },
    })
}

fn row_text(row: &DenialRow) -> String {
    let show = |r: Option<Reason>| r.map(|r| r.to_string()).unwrap_or_else(|| "allowed".into());
    format!("event {} {}: cumac {}, lwm {}", row.seq, row.verb, show(row.cumac), show(row.lwm))
}

pub fn compare_text(source: &Source, report: &ComparisonReport) -> String {
    let mut out = String::new();
    let label = report.label.map(|l| l.as_str()).unwrap_or("unlabelled");
    let _ = writeln!(out, "compare: {} ({} events, {label})", source.describe(), report.events);
    let _ = writeln!(out, "{LEVEL_MAPPING}");
    let _ = writeln!(
        out,
        "cumac denied {}, lwm denied {}, {} difference(s); denials classified as {}",
        report.cumac_denials(),
        report.lwm_denials(),
        report.differences().count(),
        report.classification.as_str()
    );
    for (title, rows) in [
        ("denied by lwm only", &report.lwm_only),
        ("denied by both", &report.both),
        ("denied by cumac only", &report.cumac_only),
    ] {
        let _ = writeln!(out, "{title}: {}", rows.len());
        for row in rows {
            let _ = writeln!(out, "  {}", row_text(row));
        }
    }
    out
}

pub fn compare_json(source: &Source, trace: &Trace, report: &ComparisonReport) -> Value {
    let rows = |rows: &[DenialRow]| -> Vec<Value> {
        rows.iter()
            .map(|row| {
                json!({
                    "seq": row.seq,
                    "event": event_line(&trace.events[(row.seq - 1) as usize].kind),
                    "cumac": row.cumac.map(to_value),
                    "lwm": row.lwm.map(to_value),
                })
            })
            .collect()
    };
    json!({
        "summary": {
            "command": "compare",
            "source": source.describe(),
            "label": report.label.map(|l| l.as_str()),
            "classification": report.classification.as_str(),
            "level_mapping": LEVEL_MAPPING,
            "events": report.events,
            "cumac_denied": report.cumac_denials(),
            "lwm_denied": report.lwm_denials(),
            "differences": report.differences().count(),
        },
        "decisions": {
            "lwm_only": rows(&report.lwm_only),
            "both": rows(&report.both),
            "cumac_only": rows(&report.cumac_only),
        },
        "taint": Value::Null,
        "timing": Value::Null,
    })
}

pub fn oracle_text(events: usize, runs: &[OracleRun]) -> String {
    let mut out = String::new();
    let matched = runs.iter().filter(|r| r.matched).count();
    let denied: usize = runs.iter().map(|r| r.denied).sum();
    let tainted: usize = runs.iter().map(|r| r.engine_taint).sum();
    let _ = writeln!(
        out,
        "oracle-check: {matched}/{} runs match ({events} events each; {tainted} tainted entities and {denied} denials in total)",
        runs.len()
    );
    for run in runs.iter().filter(|r| !r.matched) {
        match &run.error {
            Some(e) => {
                let _ = writeln!(out, "  seed {}: replay failed: {e}", run.seed);
            }
            None => {
                let _ = writeln!(
                    out,
                    "  seed {}: engine tainted {}, oracle reached {}",
                    run.seed, run.engine_taint, run.oracle_taint
                );
            }
        }
    }
    out
}

pub fn oracle_json(events: usize, seed: u64, runs: &[OracleRun]) -> Value {
    let decisions: Vec<Value> = runs
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "matched": r.matched,
                "engine_taint": r.engine_taint,
                "oracle_taint": r.oracle_taint,
                "denied": r.denied,
                "error": r.error,
            })
        })
        .collect();
    json!({
        "summary": {
            "command": "oracle-check",
            "events": events,
            "seed": seed,
            "runs": runs.len(),
            "matched": runs.iter().filter(|r| r.matched).count(),
        },
        "decisions": decisions,
        "taint": Value::Null,
        "timing": Value::Null,
    })
}
