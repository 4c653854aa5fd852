//! Taint as time-respecting reachability in the information-flow graph.
//!
//! This module never consults the engine's taint bookkeeping. It needs only
//! the trace and, per event, whether the engine refused it (refused events
//! contribute no edges and no structure). Structure such as executability,
//! paths and live mounts is re-derived here from the trace.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet, HashMap};

use super::Trace;
use crate::engine::DEFAULT_LOOPBACK_PREFIXES;
use crate::model::{path_under, EntityId, EventKind, Fid, IpcChannel};

/// Flow edges stamped with the sequence number of the event that carried
/// them, plus the entrance points.
#[derive(Debug, Default, Clone)]
pub struct FlowGraph {
    pub edges: HashMap<EntityId, Vec<(u64, EntityId)>>,
    /// `(entity, seq)`: the entity is an intrusion entrance as of `seq`.
    pub sources: Vec<(EntityId, u64)>,
}

impl FlowGraph {
    fn edge(&mut self, from: EntityId, to: EntityId, seq: u64) {
        self.edges.entry(from).or_default().push((seq, to));
    }

    /// Builds the graph. `denied[i]` tells whether event `i` was refused.
    pub fn build(trace: &Trace, denied: &[bool]) -> FlowGraph {
        let mut graph = FlowGraph::default();
        // fid -> (path, executable)
        let mut nodes: HashMap<Fid, (String, bool)> = trace
            .snapshot
            .files
            .iter()
            .map(|f| (f.fid, (f.path.clone(), !f.is_directory && f.perms.any_exec())))
            .collect();
        let mut by_path: HashMap<String, Fid> =
            trace.snapshot.files.iter().map(|f| (f.path.clone(), f.fid)).collect();
        let trust: HashMap<&str, bool> = trace
            .snapshot
            .users
            .iter()
            .map(|u| (u.name.as_str(), u.trusted))
            .collect();
        let mut mounts: Vec<(u64, String)> = Vec::new();
        let on_mount = |mounts: &[(u64, String)], path: &str| {
            mounts.iter().any(|(_, prefix)| path_under(path, prefix))
        };

        for (idx, event) in trace.events.iter().enumerate() {
            if denied.get(idx).copied().unwrap_or(false) {
                continue;
            }
            let t = event.seq;
            match &event.kind {
                EventKind::Fork { parent, child } => {
                    graph.edge(EntityId::Process(*parent), EntityId::Process(*child), t);
                }
                EventKind::Exec { pid, fid } => {
                    graph.edge(EntityId::File(*fid), EntityId::Process(*pid), t);
                    if nodes.get(fid).is_some_and(|(path, _)| on_mount(&mounts, path)) {
                        graph.sources.push((EntityId::File(*fid), t));
                        graph.sources.push((EntityId::Process(*pid), t));
                    }
                }
                EventKind::RemoteComm { pid, peer } => {
                    if !DEFAULT_LOOPBACK_PREFIXES.iter().any(|p| peer.starts_with(p)) {
                        graph.sources.push((EntityId::Process(*pid), t));
                    }
                }
                EventKind::Login { pid, user } => {
                    if !trust.get(user.as_str()).copied().unwrap_or(false) {
                        graph.sources.push((EntityId::Process(*pid), t));
                    }
                }
                EventKind::Mount { id, prefix } => mounts.push((*id, prefix.clone())),
                EventKind::Unmount { id } => mounts.retain(|(m, _)| m != id),
                EventKind::Copy {
                    pid,
                    src,
                    dst_path,
                    dst_perms,
                    dst_fid,
                    ..
                } => {
                    let dst = match by_path.get(dst_path) {
                        Some(&existing) => existing,
                        None => {
                            nodes.insert(*dst_fid, (dst_path.clone(), dst_perms.any_exec()));
                            by_path.insert(dst_path.clone(), *dst_fid);
                            *dst_fid
                        }
                    };
                    let (src_mobile, src_exec) = nodes
                        .get(src)
                        .map(|(path, exec)| (on_mount(&mounts, path), *exec))
                        .unwrap_or((false, false));
                    if src_mobile && src_exec {
                        graph.sources.push((EntityId::File(*src), t));
                    }
                    if nodes.get(&dst).is_some_and(|(_, exec)| *exec) {
                        graph.edge(EntityId::File(*src), EntityId::File(dst), t);
                        graph.edge(EntityId::Process(*pid), EntityId::File(dst), t);
                        if src_mobile {
                            graph.sources.push((EntityId::File(dst), t));
                        }
                    }
                }
                EventKind::Create {
                    pid,
                    path,
                    perms,
                    is_directory,
                    fid,
                    ..
                } => {
                    let exec = !is_directory && perms.any_exec();
                    nodes.insert(*fid, (path.clone(), exec));
                    by_path.insert(path.clone(), *fid);
                    if exec {
                        graph.edge(EntityId::Process(*pid), EntityId::File(*fid), t);
                    }
                }
                EventKind::Write { pid, fid } => {
                    if nodes.get(fid).is_some_and(|(_, exec)| *exec) {
                        graph.edge(EntityId::Process(*pid), EntityId::File(*fid), t);
                    }
                }
                EventKind::Ipc { from, to, channel } => {
                    graph.edge(EntityId::Process(*from), EntityId::Process(*to), t);
                    if *channel == IpcChannel::SharedMemory {
                        graph.edge(EntityId::Process(*to), EntityId::Process(*from), t);
                    }
                }
                EventKind::Read { .. } | EventKind::PrivOp { .. } => {}
            }
        }
        graph
    }

    /// Entities an intrusion reaches.
    pub fn reachable(&self) -> BTreeSet<EntityId> {
        self.arrival_times().into_keys().collect()
    }

    /// Earliest-arrival search from every source: an edge stamped `t` out of
    /// a node first reached at `a` carries taint only when `a < t`. Returns
    /// the sequence number at which each reached entity became tainted.
    pub fn arrival_times(&self) -> HashMap<EntityId, u64> {
        let mut arrival: HashMap<EntityId, u64> = HashMap::new();
        let mut queue = BinaryHeap::new();
        for &(entity, t) in &self.sources {
            let slot = arrival.entry(entity).or_insert(u64::MAX);
            if t < *slot {
                *slot = t;
                queue.push(Reverse((t, entity)));
            }
        }
        while let Some(Reverse((at, node))) = queue.pop() {
            if arrival.get(&node).is_some_and(|&best| best < at) {
                continue;
            }
            let Some(out) = self.edges.get(&node) else {
                continue;
            };
            for &(t, next) in out {
                if t <= at {
                    continue;
                }
                let slot = arrival.entry(next).or_insert(u64::MAX);
                if t < *slot {
                    *slot = t;
                    queue.push(Reverse((t, next)));
                }
            }
        }
        arrival
    }
}

/// Entities an intrusion can have reached, given which events were refused.
pub fn taint_oracle(trace: &Trace, denied: &[bool]) -> BTreeSet<EntityId> {
    FlowGraph::build(trace, denied).reachable()
}
