use std::collections::HashMap;

use cumac_core::scenarios::scenario;
use cumac_core::trace::{generate, permute_critical_runs, replay, FlowGraph, GeneratorConfig, Trace};
use cumac_core::{
    AccessMode, EntityId, EnvironmentBit, EventKind, ExceptionStore, ExceptionTriple, Fid, Key,
    PermissionBits, Pid,
};

const RUNS: u64 = 30;
const EVENTS: usize = 1000;

fn learn(trace: &Trace) -> ExceptionStore {
    replay(trace, EnvironmentBit::Secure, ExceptionStore::default()).unwrap().1
}

fn enforce_denials(trace: &Trace, store: ExceptionStore) -> usize {
    replay(trace, EnvironmentBit::Unsecure, store).unwrap().0.counters.denied_total()
}

/// Every critical operation a tainted process attempts while learning,
/// derived without the engine: keys and file metadata are tracked from the
/// trace itself and taint timing comes from the reachability oracle.
fn denial_candidates(trace: &Trace) -> Vec<ExceptionTriple> {
    let arrival = FlowGraph::build(trace, &vec![false; trace.events.len()]).arrival_times();
    let tainted = |pid: Pid, seq: u64| {
        arrival.get(&EntityId::Process(pid)).is_some_and(|&t| t < seq)
    };
    let mut keys: HashMap<Pid, Key> = trace.snapshot.processes.iter().map(|p| (p.pid, p.key)).collect();
    let mut perms: HashMap<Fid, PermissionBits> =
        trace.snapshot.files.iter().map(|f| (f.fid, f.perms)).collect();
    let mut by_path: HashMap<String, Fid> =
        trace.snapshot.files.iter().map(|f| (f.path.clone(), f.fid)).collect();
    let parent = |path: &str| match path.rfind('/') {
        Some(0) => "/".to_string(),
        Some(i) => path[..i].to_string(),
        None => unreachable!("absolute path"),
    };
    let mut out = Vec::new();
    for event in &trace.events {
        let seq = event.seq;
        let mut write = |pid: Pid, fid: Fid, perms: &HashMap<Fid, PermissionBits>, keys: &HashMap<Pid, Key>| {
            if tainted(pid, seq) && !perms[&fid].other_write {
                out.push(ExceptionTriple::File { key: keys[&pid], fid, mode: AccessMode::Write });
            }
        };
        match &event.kind {
            EventKind::Fork { parent, child } => {
                keys.insert(*child, keys[parent]);
            }
            EventKind::Exec { pid, fid } => {
                keys.insert(*pid, Key(*fid));
            }
            EventKind::Write { pid, fid } => write(*pid, *fid, &perms, &keys),
            EventKind::Create { pid, path, perms: p, fid, .. } => {
                write(*pid, by_path[&parent(path)], &perms, &keys);
                perms.insert(*fid, *p);
                by_path.insert(path.clone(), *fid);
            }
            EventKind::Copy { pid, dst_path, dst_perms, dst_fid, .. } => match by_path.get(dst_path) {
                Some(&existing) => write(*pid, existing, &perms, &keys),
                None => {
                    write(*pid, by_path[&parent(dst_path)], &perms, &keys);
                    perms.insert(*dst_fid, *dst_perms);
                    by_path.insert(dst_path.clone(), *dst_fid);
                }
            },
            EventKind::Read { pid, fid } if tainted(*pid, seq) && !perms[fid].other_read => {
                out.push(ExceptionTriple::File { key: keys[pid], fid: *fid, mode: AccessMode::Read });
            }
            EventKind::PrivOp { pid, capability } if tainted(*pid, seq) => {
                out.push(ExceptionTriple::Priv { key: keys[pid], capability: capability.clone() });
            }
            _ => {}
        }
    }
    out
}

#[test]
fn learn_then_enforce_has_no_denials() {
    for seed in 0..RUNS {
        let trace = generate(&GeneratorConfig::new(EVENTS, seed));
        let store = learn(&trace);
        assert_eq!(enforce_denials(&trace, store), 0, "seed {seed}");
    }
}

#[test]
fn learning_records_exactly_the_denial_candidates() {
    for seed in 0..RUNS {
        let trace = generate(&GeneratorConfig::new(EVENTS, seed));
        let store = learn(&trace);
        let expected: std::collections::BTreeSet<_> = denial_candidates(&trace).into_iter().collect();
        assert!(!expected.is_empty(), "seed {seed} has no critical operation");
        // minimal: nothing without a witness; complete: every witness recorded
        assert_eq!(store.triples(), expected, "seed {seed}");
    }
}

#[test]
fn empty_store_denies_whenever_a_tainted_critical_operation_exists() {
    for seed in 0..RUNS {
        let trace = generate(&GeneratorConfig::new(EVENTS, seed));
        if !denial_candidates(&trace).is_empty() {
            assert!(enforce_denials(&trace, ExceptionStore::default()) >= 1, "seed {seed}");
        }
    }
}

#[test]
fn learning_is_order_independent() {
    for seed in 0..RUNS {
        let trace = generate(&GeneratorConfig::new(EVENTS, seed));
        let reference = learn(&trace).save();
        for salt in 0..3 {
            let permuted = permute_critical_runs(&trace, seed * 10 + salt);
            assert_eq!(learn(&permuted).save(), reference, "seed {seed} salt {salt}");
        }
    }
}

#[test]
fn admin_upgrade_learned_store_round_trips() {
    let trace = scenario("admin-remote-upgrade").unwrap().trace().unwrap();
    let store = learn(&trace);
    let reloaded = ExceptionStore::load(&store.save()).unwrap();
    assert!(reloaded.same_contents(&store));
    for triple in store.triples() {
        match triple {
            ExceptionTriple::File { key, fid, mode } => assert!(reloaded.check_file_exception(key, fid, mode)),
            ExceptionTriple::Priv { key, capability } => {
                assert!(reloaded.check_priv_exception(key, &capability))
            }
        }
    }
    assert_eq!(enforce_denials(&trace, reloaded), 0);
}

#[test]
fn usb_rootkit_benign_variant_round_trips() {
    // the rootkit trace learned as if it were benign
    let trace = scenario("usb-rootkit").unwrap().trace().unwrap();
    let store = learn(&trace);
    assert_eq!(store.len(), 1);
    let reloaded = ExceptionStore::load(&store.save()).unwrap();
    assert_eq!(reloaded.triples(), store.triples());
    assert_eq!(reloaded.save(), store.save());
}
