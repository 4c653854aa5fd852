use super::lwm::LwmEngine;
use crate::exceptions::{EnvironmentBit, ExceptionStore};
use crate::model::Reason;
use crate::trace::{replay, ReplayError, Trace, TraceLabel};

/// How the baseline's initial levels correspond to the taint entrances.
pub const LEVEL_MAPPING: &str = "low-water-mark levels: every seeded entity starts high; \
non-loopback NET and untrusted LOGIN demote the process to low; MOUNT demotes everything \
under the prefix to low; READ, EXEC, IPC and the source side of COPY are reads; WRITE, \
CREATE and COPY destinations are writes; PRIV is a write to a notional high object";

/// What a denial means given the trace's ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// A benign access refused: the incompatibility the comparison measures.
    FalseNegative,
    /// An attack step refused.
    TruePositive,
    Unlabelled,
}

impl Classification {
    fn of(label: Option<TraceLabel>) -> Self {
        match label {
            Some(TraceLabel::Benign) => Classification::FalseNegative,
            Some(TraceLabel::Attack) => Classification::TruePositive,
            None => Classification::Unlabelled,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::FalseNegative => "false-negative",
            Classification::TruePositive => "true-positive",
            Classification::Unlabelled => "unlabelled",
        }
    }
}

/// One event refused by at least one engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenialRow {
    pub seq: u64,
    pub verb: &'static str,
    pub cumac: Option<Reason>,
    pub lwm: Option<Reason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub label: Option<TraceLabel>,
    pub events: usize,
    /// Denied by the baseline, allowed by the taint engine.
    pub lwm_only: Vec<DenialRow>,
    pub both: Vec<DenialRow>,
    /// Denied by the taint engine, allowed by the baseline.
    pub cumac_only: Vec<DenialRow>,
    pub classification: Classification,
}

impl ComparisonReport {
    pub fn cumac_denials(&self) -> usize {
        self.both.len() + self.cumac_only.len()
    }

    pub fn lwm_denials(&self) -> usize {
        self.both.len() + self.lwm_only.len()
    }

    /// Events on which the two engines disagree.
    pub fn differences(&self) -> impl Iterator<Item = &DenialRow> {
        self.lwm_only.iter().chain(&self.cumac_only)
    }
}

/// Replays `trace` through the taint engine (enforcing, with `store`) and
/// through the Low-Water-Mark baseline, and lines up their denials.
pub fn compare(trace: &Trace, store: &ExceptionStore) -> Result<ComparisonReport, ReplayError> {
    let (cumac, _) = replay(trace, EnvironmentBit::Unsecure, store.clone())?;
    let mut lwm = LwmEngine::new(&trace.engine_config())?;
    let mut report = ComparisonReport {
        label: trace.snapshot.label,
        events: trace.events.len(),
        lwm_only: Vec::new(),
        both: Vec::new(),
        cumac_only: Vec::new(),
        classification: Classification::of(trace.snapshot.label),
    };
    for (event, (_, decision)) in trace.events.iter().zip(&cumac.decisions) {
        let baseline = lwm.step(event)?;
        let row = DenialRow {
            seq: event.seq,
            verb: event.kind.verb(),
            cumac: decision.is_deny().then_some(decision.reason).flatten(),
            lwm: baseline.reason,
        };
        match (row.cumac.is_some(), row.lwm.is_some()) {
            (true, true) => report.both.push(row),
            (true, false) => report.cumac_only.push(row),
            (false, true) => report.lwm_only.push(row),
            (false, false) => {}
        }
    }
    Ok(report)
}
