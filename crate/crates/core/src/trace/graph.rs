use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{ReplayReport, Trace};
use crate::model::{EntityId, EventKind, Fid};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Entity(EntityId),
    Peer(String),
    User(String),
    Capability(String),
}

impl Node {
    fn id(&self) -> String {
        match self {
            Node::Entity(e) => e.to_string(),
            Node::Peer(p) => format!("net:{p}"),
            Node::User(u) => format!("user:{u}"),
            Node::Capability(c) => format!("cap:{c}"),
        }
    }
}

/// Renders the replay as a DOT digraph: tainted entities are red, edges are
/// the flow events of the trace, refused events are dashed. Node and edge
/// order is canonical.
pub fn export_taint_graph(report: &ReplayReport, trace: &Trace) -> String {
    let mut paths: HashMap<Fid, String> = trace
        .snapshot
        .files
        .iter()
        .map(|f| (f.fid, f.path.clone()))
        .collect();
    let mut by_path: HashMap<String, Fid> =
        trace.snapshot.files.iter().map(|f| (f.path.clone(), f.fid)).collect();
    let denied: BTreeSet<u64> = report.denials().map(|(seq, _)| seq).collect();

    let mut nodes: BTreeSet<Node> = BTreeSet::new();
    // (seq, from, to, verb)
    let mut edges: Vec<(u64, Node, Node, &'static str)> = Vec::new();
    let proc = |pid| Node::Entity(EntityId::Process(pid));
    let file = |fid| Node::Entity(EntityId::File(fid));

    for event in &trace.events {
        let verb = event.kind.verb();
        let mut push = |from: Node, to: Node| edges.push((event.seq, from, to, verb));
        match &event.kind {
            EventKind::Fork { parent, child } => push(proc(*parent), proc(*child)),
            EventKind::Exec { pid, fid } => push(file(*fid), proc(*pid)),
            EventKind::RemoteComm { pid, peer } => push(Node::Peer(peer.clone()), proc(*pid)),
            EventKind::Login { pid, user } => push(Node::User(user.clone()), proc(*pid)),
            EventKind::Mount { .. } | EventKind::Unmount { .. } => {}
            EventKind::Copy {
                pid,
                src,
                dst_path,
                dst_fid,
                ..
            } => {
                let dst = match by_path.get(dst_path) {
                    Some(&fid) => fid,
                    None => {
                        paths.insert(*dst_fid, dst_path.clone());
                        by_path.insert(dst_path.clone(), *dst_fid);
                        *dst_fid
                    }
                };
                push(file(*src), file(dst));
                push(proc(*pid), file(dst));
            }
            EventKind::Create { pid, path, fid, .. } => {
                paths.insert(*fid, path.clone());
                by_path.insert(path.clone(), *fid);
                push(proc(*pid), file(*fid));
            }
            EventKind::Write { pid, fid } => push(proc(*pid), file(*fid)),
            EventKind::Read { pid, fid } => push(file(*fid), proc(*pid)),
            EventKind::Ipc { from, to, channel } => {
                push(proc(*from), proc(*to));
                if channel.is_bidirectional() {
                    push(proc(*to), proc(*from));
                }
            }
            EventKind::PrivOp { pid, capability } => {
                push(proc(*pid), Node::Capability(capability.to_string()))
            }
        }
    }
    for (_, from, to, _) in &edges {
        nodes.insert(from.clone());
        nodes.insert(to.clone());
    }
    for entity in &report.final_taint {
        nodes.insert(Node::Entity(*entity));
    }
    edges.sort();

    let mut out = String::from("digraph taint {\n");
    for node in &nodes {
        let label = match node {
            Node::Entity(EntityId::Process(pid)) => format!("pid {pid}"),
            Node::Entity(EntityId::File(fid)) => paths
                .get(fid)
                .cloned()
                .unwrap_or_else(|| format!("fid {fid}")),
            Node::Peer(p) => p.clone(),
            Node::User(u) => format!("login {u}"),
            Node::Capability(c) => c.clone(),
        };
        let shape = match node {
            Node::Entity(EntityId::Process(_)) => "ellipse",
            Node::Entity(EntityId::File(_)) => "box",
            _ => "diamond",
        };
        let tainted = matches!(node, Node::Entity(e) if report.final_taint.contains(e));
        let _ = write!(out, "  \"{}\" [label=\"{}\", shape={shape}", escape(&node.id()), escape(&label));
        if tainted {
            out.push_str(", color=red, fontcolor=red");
        }
        out.push_str("];\n");
    }
    for (seq, from, to, verb) in &edges {
        let _ = write!(out, "  \"{}\" -> \"{}\" [label=\"{seq} {verb}\"", escape(&from.id()), escape(&to.id()));
        if denied.contains(seq) {
            out.push_str(", style=dashed");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
