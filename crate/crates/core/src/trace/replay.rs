use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use super::Trace;
use crate::engine::Engine;
use crate::error::{ConfigError, TraceError};
use crate::exceptions::{EnvironmentBit, ExceptionStore};
use crate::model::{Decision, EntityId, Reason, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    /// Plain allows, including the ones issued while learning.
    pub allowed: usize,
    pub denied: BTreeMap<Reason, usize>,
    pub allowed_by_exception: usize,
    /// Decisions that recorded an exception (secure mode only).
    pub learned: usize,
}

impl Counters {
    pub fn denied_total(&self) -> usize {
        self.denied.values().sum()
    }

    pub fn total(&self) -> usize {
        self.allowed + self.denied_total() + self.allowed_by_exception
    }
}

/// Per-event decision timing, in nanoseconds from a monotonic clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timing {
    pub wall_ns: u64,
    pub median_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl Timing {
    pub fn events_per_sec(&self, events: usize) -> f64 {
        if self.wall_ns == 0 {
            return f64::INFINITY;
        }
        events as f64 / (self.wall_ns as f64 / 1e9)
    }

    fn from_samples(mut samples: Vec<u64>, wall_ns: u64) -> Self {
        if samples.is_empty() {
            return Timing { wall_ns, ..Timing::default() };
        }
        samples.sort_unstable();
        let at = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
        Timing {
            wall_ns,
            median_ns: at(0.5),
            p99_ns: at(0.99),
            max_ns: *samples.last().unwrap_or(&0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub mode: EnvironmentBit,
    /// `(seq, decision)` for every event, in trace order.
    pub decisions: Vec<(u64, Decision)>,
    pub final_taint: BTreeSet<EntityId>,
    pub counters: Counters,
    /// Store entries added during this replay.
    pub learned_exceptions: usize,
    pub timing: Timing,
    /// Generator seed, when the trace was synthesized.
    pub seed: Option<u64>,
}

impl ReplayReport {
    pub fn denials(&self) -> impl Iterator<Item = (u64, Reason)> + '_ {
        self.decisions
            .iter()
            .filter(|(_, d)| d.is_deny())
            .filter_map(|(seq, d)| d.reason.map(|r| (*seq, r)))
    }

    pub fn denied_flags(&self) -> Vec<bool> {
        self.decisions.iter().map(|(_, d)| d.is_deny()).collect()
    }
}

/// Replays `trace` and returns the engine in its final state.
pub fn replay_engine(trace: &Trace, mode: EnvironmentBit, mut store: ExceptionStore) -> Result<Engine, ReplayError> {
    store.set_bit(mode);
    let mut engine = Engine::new(trace.engine_config(), store)?;
    for event in &trace.events {
        engine.step(event)?;
    }
    Ok(engine)
}

/// Replays `trace` under the given environment bit. The store comes back
/// augmented in secure mode and untouched in unsecure mode.
pub fn replay(
    trace: &Trace,
    mode: EnvironmentBit,
    mut store: ExceptionStore,
) -> Result<(ReplayReport, ExceptionStore), ReplayError> {
    store.set_bit(mode);
    let before = store.triples().len();
    let mut engine = Engine::new(trace.engine_config(), store)?;
    let mut samples = Vec::with_capacity(trace.events.len());
    let mut counters = Counters::default();
    let wall = Instant::now();
    for event in &trace.events {
        let start = Instant::now();
        let decision = engine.step(event)?;
        samples.push(start.elapsed().as_nanos() as u64);
        match decision.verdict {
            Verdict::Allow => {
                counters.allowed += 1;
                if decision.is_learned() {
                    counters.learned += 1;
                }
            }
            Verdict::AllowByException => counters.allowed_by_exception += 1,
            Verdict::Deny => {
                if let Some(reason) = decision.reason {
                    *counters.denied.entry(reason).or_default() += 1;
                }
            }
        }
    }
    let timing = Timing::from_samples(samples, wall.elapsed().as_nanos() as u64);
    let final_taint = engine.tainted_entities();
    let learned_exceptions = engine.store().triples().len() - before;
    let (log, store) = engine.into_parts();
    let decisions = log.into_iter().map(|(event, d)| (event.seq, d)).collect();
    Ok((
        ReplayReport {
            mode,
            decisions,
            final_taint,
            counters,
            learned_exceptions,
            timing,
            seed: None,
        },
        store,
    ))
}
