//! Event traces: the line-oriented text format, the replay driver, the
//! independent taint-reachability oracle, graph export and the seeded
//! random-trace generator.

mod generate;
mod graph;
mod oracle;
mod parse;
mod replay;

use std::collections::HashMap;
use std::fmt::Write as _;

pub use generate::{generate, permute_critical_runs, GeneratorConfig, EventWeights};
pub use graph::export_taint_graph;
pub use oracle::{taint_oracle, FlowGraph};
pub use parse::{parse_trace, parse_trace_bytes};
pub use replay::{replay, replay_engine, Counters, ReplayError, ReplayReport, Timing};

use crate::engine::EngineConfig;
use crate::model::{Event, EventKind, Fid, FileRecord, ProcessRecord, UserRecord};

pub const TRACE_HEADER: &str = "cumac-trace v1";

/// Ground-truth label used by the baseline comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TraceLabel {
    Benign,
    Attack,
}

impl TraceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceLabel::Benign => "benign",
            TraceLabel::Attack => "attack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Snapshot {
    pub label: Option<TraceLabel>,
    pub users: Vec<UserRecord>,
    pub files: Vec<FileRecord>,
    pub processes: Vec<ProcessRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub snapshot: Snapshot,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            users: self.snapshot.users.clone(),
            files: self.snapshot.files.clone(),
            processes: self.snapshot.processes.clone(),
            ..EngineConfig::default()
        }
    }

    /// Every path the trace declares or creates, by fid.
    pub fn paths(&self) -> HashMap<Fid, String> {
        let mut paths: HashMap<Fid, String> =
            self.snapshot.files.iter().map(|f| (f.fid, f.path.clone())).collect();
        for event in &self.events {
            match &event.kind {
                EventKind::Create { path, fid, .. } => {
                    paths.insert(*fid, path.clone());
                }
                EventKind::Copy { dst_path, dst_fid, .. } => {
                    paths.entry(*dst_fid).or_insert_with(|| dst_path.clone());
                }
                _ => {}
            }
        }
        paths
    }

    /// Canonical text form; `parse_trace(&t.render()) == Ok(t)` for any
    /// parsed trace.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 * (self.events.len() + 8));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        if let Some(label) = self.snapshot.label {
            let _ = writeln!(out, "LABEL {}", label.as_str());
        }
        for u in &self.snapshot.users {
            let _ = writeln!(out, "USER {} trusted={}", u.name, u8::from(u.trusted));
        }
        for f in &self.snapshot.files {
            let _ = writeln!(
                out,
                "FILE fid={} path={} perms={} owner={} dir={}",
                f.fid,
                f.path,
                f.perms,
                f.owner,
                u8::from(f.is_directory)
            );
        }
        for p in &self.snapshot.processes {
            let _ = writeln!(out, "PROC pid={} key={} user={}", p.pid, p.key.0, p.user);
        }
        for event in &self.events {
            render_event(&mut out, &event.kind);
            out.push('\n');
        }
        out
    }
}

/// One event in trace-file syntax.
pub fn event_line(kind: &EventKind) -> String {
    let mut out = String::new();
    render_event(&mut out, kind);
    out
}

fn render_event(out: &mut String, kind: &EventKind) {
    let _ = match kind {
        EventKind::Fork { parent, child } => write!(out, "FORK parent={parent} child={child}"),
        EventKind::Exec { pid, fid } => write!(out, "EXEC pid={pid} fid={fid}"),
        EventKind::RemoteComm { pid, peer } => write!(out, "NET pid={pid} peer={peer}"),
        EventKind::Login { pid, user } => write!(out, "LOGIN pid={pid} user={user}"),
        EventKind::Mount { id, prefix } => write!(out, "MOUNT id={id} prefix={prefix}"),
        EventKind::Unmount { id } => write!(out, "UNMOUNT id={id}"),
        EventKind::Copy {
            pid,
            src,
            dst_path,
            dst_perms,
            dst_owner,
            dst_fid,
        } => write!(
            out,
            "COPY pid={pid} src={src} dst={dst_path} perms={dst_perms} owner={dst_owner} fid={dst_fid}"
        ),
        EventKind::Create {
            pid,
            path,
            perms,
            owner,
            is_directory,
            fid,
        } => write!(
            out,
            "CREATE pid={pid} path={path} perms={perms} owner={owner} dir={} fid={fid}",
            u8::from(*is_directory)
        ),
        EventKind::Write { pid, fid } => write!(out, "WRITE pid={pid} fid={fid}"),
        EventKind::Read { pid, fid } => write!(out, "READ pid={pid} fid={fid}"),
        EventKind::Ipc { from, to, channel } => {
            write!(out, "IPC from={from} to={to} chan={}", channel.as_str())
        }
        EventKind::PrivOp { pid, capability } => write!(out, "PRIV pid={pid} cap={capability}"),
    };
}
