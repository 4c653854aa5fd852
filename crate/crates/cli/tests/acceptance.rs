//! Acceptance run: one PASS/FAIL line per criterion. Expected values are
//! derived here, independently of the engine, from the trace text itself.
//! The process exits non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use cumac_core::baseline::{lwm_step, LwmEngine};
use cumac_core::scenarios::{scenario, SCENARIOS};
use cumac_core::trace::{
    generate, parse_trace_bytes, permute_critical_runs, replay, taint_oracle, FlowGraph, GeneratorConfig,
    ReplayReport, Trace,
};
use cumac_core::{
    AccessMode, Capability, EntityId, EnvironmentBit, EventKind, ExceptionStore, ExceptionTriple, Fid, Key,
    PermissionBits, Pid, Reason, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const SCENARIO_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_RUNS: u64 = 100;
const ORACLE_EVENTS: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const WORKFLOW_RUNS: u64 = 50;
const WORKFLOW_EVENTS: usize = 1000;
const PERMUTATIONS: u64 = 3;
const CLEAN_RUNS: u64 = 100;
const STORE_RUNS: u64 = 100;
const PERF_SMALL: usize = 10_000;
const PERF_LARGE: usize = 1_000_000;
const PERF_MEDIAN_RATIO: f64 = 3.0;
const PERF_MIN_EVENTS_PER_SEC: f64 = 100_000.0;
const FUZZ_FILES: u64 = 100_000;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("1 usb-rootkit: only the module load is denied", usb_rootkit),
        ("2 local-ptrace: ptrace denied, public reads allowed", local_ptrace),
        ("3 network-rootkit: taint chain and module install denied", network_rootkit),
        ("4 self-revocation: one-event difference against the baseline", self_revocation),
        ("5 exception workflow: learn, enforce, order independence", exception_workflow),
        ("6 oracle equivalence on random traces", oracle_equivalence),
        ("7 clean traces: no taint, no denials", clean_traces),
        ("8 store round-trip and canonical save", store_round_trip),
        ("9 decision cost independent of trace size", performance),
        ("10 parser totality on mutated trace files", parser_totality),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&*p))));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "non-string panic".into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(name: &str) -> Trace {
    scenario(name).expect("bundled scenario").trace().expect("bundled scenario parses")
}

fn enforce(trace: &Trace, store: ExceptionStore) -> ReplayReport {
    replay(trace, EnvironmentBit::Unsecure, store).expect("replay").0
}

fn learn(trace: &Trace) -> ExceptionStore {
    replay(trace, EnvironmentBit::Secure, ExceptionStore::default()).expect("replay").1
}

fn tainted_at(report: &ReplayReport, seq: u64, entity: EntityId) -> bool {
    report.decisions[(seq - 1) as usize].1.taint_updates.iter().any(|u| u.entity == entity)
}

fn cumac(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cumac")).args(args).output().expect("run cumac");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn usb_rootkit() -> Outcome {
    let trace = load("usb-rootkit");
    // The loader is whatever process exec'd a file under the mounted prefix.
    let paths = trace.paths();
    let mut mounted: Option<String> = None;
    let mut loader: Option<Pid> = None;
    for event in &trace.events {
        match &event.kind {
            EventKind::Mount { prefix, .. } => mounted = Some(prefix.clone()),
            EventKind::Unmount { .. } => mounted = None,
            EventKind::Exec { pid, fid } => {
                if let Some(prefix) = &mounted {
                    if paths[fid].starts_with(&format!("{prefix}/")) {
                        loader = Some(*pid);
                    }
                }
            }
            _ => {}
        }
    }
    let loader = loader.ok_or("no exec from the mounted device")?;
    let module_load = trace
        .events
        .iter()
        .find(|e| matches!(&e.kind, EventKind::PrivOp { pid, capability }
            if *pid == loader && capability.as_str() == "CAP_SYS_MODULE"))
        .ok_or("no module load by the loader")?
        .seq;

    let start = Instant::now();
    let report = enforce(&trace, ExceptionStore::default());
    let elapsed = start.elapsed();
    let denials: Vec<(u64, Reason)> = report.denials().collect();
    ensure(denials == [(module_load, Reason::PrivilegedOp)], || format!("denials {denials:?}"))?;
    let earlier_denied = report.decisions.iter().any(|(seq, d)| *seq < module_load && d.verdict != Verdict::Allow);
    ensure(!earlier_denied, || "an earlier event was not a plain allow".into())?;
    ensure(elapsed < SCENARIO_BUDGET, || format!("took {elapsed:?}"))?;
    let (code, _) = cumac(&["enforce", "--scenario", "usb-rootkit", "--empty-store", "--no-timing"]);
    ensure(code == 1, || format!("cumac enforce exited {code}, expected 1"))?;
    Ok(format!("event {module_load} denied PrivilegedOp, {:?}, exit 1", elapsed))
}

fn local_ptrace() -> Outcome {
    let trace = load("local-ptrace");
    let perms: HashMap<Fid, PermissionBits> = trace.snapshot.files.iter().map(|f| (f.fid, f.perms)).collect();
    let untrusted: BTreeSet<&str> =
        trace.snapshot.users.iter().filter(|u| !u.trusted).map(|u| u.name.as_str()).collect();
    // The session: the untrusted login process and everything it forks.
    let mut session: BTreeSet<Pid> = BTreeSet::new();
    let mut ptrace = None;
    let mut public_reads = Vec::new();
    for event in &trace.events {
        match &event.kind {
            EventKind::Login { pid, user } if untrusted.contains(user.as_str()) => {
                session.insert(*pid);
            }
            EventKind::Fork { parent, child } if session.contains(parent) => {
                session.insert(*child);
            }
            EventKind::Read { pid, fid } if session.contains(pid) && perms[fid].other_read => {
                public_reads.push(event.seq)
            }
            EventKind::PrivOp { pid, capability }
                if session.contains(pid) && capability.as_str() == "CAP_SYS_PTRACE" =>
            {
                ptrace = Some(event.seq)
            }
            _ => {}
        }
    }
    let ptrace = ptrace.ok_or("no ptrace attempt in the session")?;
    ensure(!public_reads.is_empty(), || "no public reads in the session".into())?;
    let report = enforce(&trace, ExceptionStore::default());
    let verdict = |seq: u64| &report.decisions[(seq - 1) as usize].1;
    ensure(verdict(ptrace).verdict == Verdict::Deny && verdict(ptrace).reason == Some(Reason::PrivilegedOp), || {
        format!("ptrace got {:?}", verdict(ptrace))
    })?;
    for &seq in &public_reads {
        ensure(verdict(seq).verdict == Verdict::Allow, || format!("read at {seq} got {:?}", verdict(seq)))?;
    }
    Ok(format!("ptrace at {ptrace} denied, reads {public_reads:?} allowed"))
}

fn network_rootkit() -> Outcome {
    let trace = load("network-rootkit");
    let find = |f: &dyn Fn(&EventKind) -> bool| trace.events.iter().find(|e| f(&e.kind)).map(|e| (e.seq, e.kind.clone()));
    let (net_seq, net) = find(&|k| matches!(k, EventKind::RemoteComm { .. })).ok_or("no NET")?;
    let EventKind::RemoteComm { pid: browser, .. } = net else { unreachable!() };
    let (write_seq, write) =
        find(&|k| matches!(k, EventKind::Write { pid, .. } if *pid == browser)).ok_or("no download write")?;
    let EventKind::Write { fid: download, .. } = write else { unreachable!() };
    let (exec_seq, exec) =
        find(&|k| matches!(k, EventKind::Exec { fid, .. } if *fid == download)).ok_or("no exec of the download")?;
    let EventKind::Exec { pid: installer, .. } = exec else { unreachable!() };
    let (priv_seq, _) =
        find(&|k| matches!(k, EventKind::PrivOp { pid, capability } if *pid == installer && capability.as_str() == "CAP_SYS_MODULE"))
            .ok_or("no module install")?;

    let report = enforce(&trace, ExceptionStore::default());
    ensure(tainted_at(&report, net_seq, EntityId::Process(browser)), || "browser not tainted at NET".into())?;
    ensure(tainted_at(&report, write_seq, EntityId::File(download)), || "download not tainted at write".into())?;
    ensure(tainted_at(&report, exec_seq, EntityId::Process(installer)), || "installer not tainted at exec".into())?;
    let denials: Vec<(u64, Reason)> = report.denials().collect();
    ensure(denials == [(priv_seq, Reason::PrivilegedOp)], || format!("denials {denials:?}"))?;
    Ok(format!("tainted at {net_seq}/{write_seq}/{exec_seq}, install at {priv_seq} denied"))
}

fn self_revocation() -> Outcome {
    let trace = load("self-revocation");
    let last = trace.events.last().ok_or("empty trace")?;
    ensure(matches!(last.kind, EventKind::Write { .. }), || "final event is not a write".into())?;

    let cumac_report = enforce(&trace, ExceptionStore::default());
    let cumac_denied: Vec<u64> = cumac_report.denials().map(|(s, _)| s).collect();
    let mut lwm = LwmEngine::new(&trace.engine_config()).map_err(|e| e.to_string())?;
    let lwm_denied: Vec<u64> = trace
        .events
        .iter()
        .filter(|e| lwm_step(&mut lwm, e).expect("lwm replay").is_deny())
        .map(|e| e.seq)
        .collect();
    ensure(cumac_denied.is_empty(), || format!("cumac denied {cumac_denied:?}"))?;
    ensure(lwm_denied == [last.seq], || format!("lwm denied {lwm_denied:?}"))?;

    let (code, out) =
        cumac(&["compare", "--scenario", "self-revocation", "--empty-store", "--format", "structured"]);
    let json: serde_json::Value = serde_json::from_str(&out).map_err(|e| format!("compare output: {e}"))?;
    let lwm_only: Vec<u64> = json["decisions"]["lwm_only"]
        .as_array()
        .ok_or("no lwm_only rows")?
        .iter()
        .filter_map(|r| r["seq"].as_u64())
        .collect();
    ensure(json["summary"]["differences"] == 1, || format!("differences {}", json["summary"]["differences"]))?;
    ensure(lwm_only == [last.seq], || format!("lwm_only {lwm_only:?}"))?;
    ensure(code == 1, || format!("cumac compare exited {code}, expected 1"))?;
    Ok(format!("only event {} differs (lwm denies, cumac allows)", last.seq))
}

/// Every critical operation a tainted process attempts while learning,
/// from key and permission tracking over the trace plus oracle arrival times.
fn critical_witnesses(trace: &Trace) -> BTreeSet<ExceptionTriple> {
    let arrival = FlowGraph::build(trace, &vec![false; trace.events.len()]).arrival_times();
    let tainted = |pid: Pid, seq: u64| arrival.get(&EntityId::Process(pid)).is_some_and(|&t| t < seq);
    let mut keys: HashMap<Pid, Key> = trace.snapshot.processes.iter().map(|p| (p.pid, p.key)).collect();
    let mut perms: HashMap<Fid, PermissionBits> = trace.snapshot.files.iter().map(|f| (f.fid, f.perms)).collect();
    let mut by_path: HashMap<String, Fid> = trace.snapshot.files.iter().map(|f| (f.path.clone(), f.fid)).collect();
    let parent = |path: &str| match path.rfind('/') {
        Some(0) | None => "/".to_string(),
        Some(i) => path[..i].to_string(),
    };
    let mut out = BTreeSet::new();
    for event in &trace.events {
        let seq = event.seq;
        let mut write = |pid: Pid, fid: Fid, perms: &HashMap<Fid, PermissionBits>, keys: &HashMap<Pid, Key>| {
            if tainted(pid, seq) && !perms[&fid].other_write {
                out.insert(ExceptionTriple::File { key: keys[&pid], fid, mode: AccessMode::Write });
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
                out.insert(ExceptionTriple::File { key: keys[pid], fid: *fid, mode: AccessMode::Read });
            }
            EventKind::PrivOp { pid, capability } if tainted(*pid, seq) => {
                out.insert(ExceptionTriple::Priv { key: keys[pid], capability: capability.clone() });
            }
            _ => {}
        }
    }
    out
}

fn check_workflow(name: &str, trace: &Trace, permutation_seed: u64) -> Result<bool, String> {
    let store = learn(trace);
    let canonical = store.save();
    let after = enforce(trace, store).counters.denied_total();
    ensure(after == 0, || format!("{name}: {after} denials after learning"))?;
    let critical = !critical_witnesses(trace).is_empty();
    if critical {
        let empty = enforce(trace, ExceptionStore::default()).counters.denied_total();
        ensure(empty >= 1, || format!("{name}: tainted critical op but no denial with an empty store"))?;
    }
    for salt in 0..PERMUTATIONS {
        let permuted = permute_critical_runs(trace, permutation_seed * 10 + salt);
        ensure(learn(&permuted).save() == canonical, || format!("{name}: permutation {salt} changed the store"))?;
    }
    Ok(critical)
}

fn exception_workflow() -> Outcome {
    let fixture = load("admin-remote-upgrade");
    ensure(check_workflow("admin-remote-upgrade", &fixture, 0)?, || {
        "admin-remote-upgrade has no tainted critical operation".into()
    })?;
    let mut critical = 0;
    for seed in 0..WORKFLOW_RUNS {
        let trace = generate(&GeneratorConfig::new(WORKFLOW_EVENTS, seed));
        critical += usize::from(check_workflow(&format!("seed {seed}"), &trace, seed)?);
    }
    Ok(format!(
        "fixture + {WORKFLOW_RUNS} traces: 0 denials after learning, {critical} with critical ops denied on empty store, \
         {PERMUTATIONS} permutations each give identical stores"
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut tainted = 0;
    for seed in 0..ORACLE_RUNS {
        let trace = generate(&GeneratorConfig::new(ORACLE_EVENTS, seed));
        let report = enforce(&trace, ExceptionStore::default());
        let oracle = taint_oracle(&trace, &report.denied_flags());
        ensure(report.final_taint == oracle, || {
            format!("seed {seed}: engine {} vs oracle {}", report.final_taint.len(), oracle.len())
        })?;
        tainted += oracle.len();
    }
    let elapsed = start.elapsed();
    ensure(tainted > 0, || "no run produced taint".into())?;
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{ORACLE_RUNS}x{ORACLE_EVENTS} events match ({tainted} tainted entities) in {elapsed:?}"))
}

fn clean_traces() -> Outcome {
    for seed in 0..CLEAN_RUNS {
        let mut config = GeneratorConfig::new(ORACLE_EVENTS, seed);
        config.suppress_entrances = true;
        let trace = generate(&config);
        let report = enforce(&trace, ExceptionStore::default());
        ensure(report.final_taint.is_empty(), || format!("seed {seed}: taint {:?}", report.final_taint))?;
        ensure(report.counters.denied_total() == 0, || format!("seed {seed}: denials"))?;
    }
    Ok(format!("{CLEAN_RUNS} traces, zero taint, zero denials"))
}

fn random_store(rng: &mut ChaCha8Rng) -> (Vec<ExceptionTriple>, Vec<Capability>) {
    let caps: Vec<Capability> = (0..rng.gen_range(1..6))
        .map(|i| Capability::new(&format!("CAP_T{i}_{}", rng.gen_range(0..100))).expect("capability"))
        .collect();
    let triples = (0..rng.gen_range(0..80))
        .map(|_| {
            let key = Key(rng.gen_range(0..30));
            if rng.gen_bool(0.7) {
                let mode = if rng.gen_bool(0.5) { AccessMode::Read } else { AccessMode::Write };
                ExceptionTriple::File { key, fid: rng.gen_range(0..30), mode }
            } else {
                ExceptionTriple::Priv { key, capability: caps[rng.gen_range(0..caps.len())].clone() }
            }
        })
        .collect();
    (triples, caps)
}

fn store_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0;
    for run in 0..STORE_RUNS {
        let (triples, caps) = random_store(&mut rng);
        let mut store = ExceptionStore::new(EnvironmentBit::Secure);
        for t in &triples {
            match t {
                ExceptionTriple::File { key, fid, mode } => store.record_file_exception(*key, *fid, *mode),
                ExceptionTriple::Priv { key, capability } => store.record_priv_exception(*key, capability),
            }
            .map_err(|e| format!("run {run}: {e}"))?;
        }
        let saved = store.save();
        let loaded = ExceptionStore::load(&saved).map_err(|e| format!("run {run}: {e}"))?;
        let inserted: BTreeSet<ExceptionTriple> = triples.iter().cloned().collect();
        for key in (0..30).map(Key) {
            for fid in 0..30 {
                for mode in [AccessMode::Read, AccessMode::Write] {
                    let expected = inserted.contains(&ExceptionTriple::File { key, fid, mode });
                    ensure(loaded.check_file_exception(key, fid, mode) == expected, || {
                        format!("run {run}: file query {key} {fid} {mode:?}")
                    })?;
                }
            }
            for cap in &caps {
                let expected = inserted.contains(&ExceptionTriple::Priv { key, capability: cap.clone() });
                ensure(loaded.check_priv_exception(key, cap) == expected, || format!("run {run}: priv query"))?;
            }
        }
        let again = ExceptionStore::load(&loaded.save()).map_err(|e| format!("run {run}: {e}"))?;
        ensure(loaded.save() == saved && again.save() == saved, || format!("run {run}: save not canonical"))?;
        total += inserted.len();
    }
    Ok(format!("{STORE_RUNS} stores ({total} triples) answer every query identically; save is canonical"))
}

fn performance() -> Outcome {
    let small = enforce(&generate(&GeneratorConfig::new(PERF_SMALL, 9)), ExceptionStore::default());
    let large_trace = generate(&GeneratorConfig::new(PERF_LARGE, 9));
    let large = enforce(&large_trace, ExceptionStore::default());
    let ratio = large.timing.median_ns.max(1) as f64 / small.timing.median_ns.max(1) as f64;
    let rate = large.timing.events_per_sec(large_trace.events.len());
    ensure(ratio <= PERF_MEDIAN_RATIO, || {
        format!("median {} ns vs {} ns (x{ratio:.2})", large.timing.median_ns, small.timing.median_ns)
    })?;
    ensure(rate >= PERF_MIN_EVENTS_PER_SEC, || format!("{rate:.0} events/s"))?;
    Ok(format!(
        "median {} ns at 1e6 vs {} ns at 1e4 (x{ratio:.2}), {rate:.0} events/s",
        large.timing.median_ns, small.timing.median_ns
    ))
}

fn mutate(rng: &mut ChaCha8Rng, mut bytes: Vec<u8>) -> Vec<u8> {
    const TOKENS: &[&str] = &[
        "fid=", "pid=", "=", " ", "\n", "#", "999999", "-1", "18446744073709551616", "FORK", "EXEC", "COPY",
        "CREATE", "MOUNT", "UNMOUNT", "PRIV cap=", "IPC", "LABEL", "FILE", "PROC", "USER", "perms=", "dir=1", "/",
        "\u{00e9}", "\0", "\r\n",
    ];
    for _ in 0..rng.gen_range(1..8) {
        let len = bytes.len();
        match rng.gen_range(0..6) {
            0 if len > 0 => {
                let i = rng.gen_range(0..len);
                bytes[i] = rng.gen();
            }
            1 if len > 0 => {
                let i = rng.gen_range(0..len);
                let j = rng.gen_range(i..len.min(i + 16) + 1).min(len);
                bytes.drain(i..j);
            }
            2 => {
                let i = rng.gen_range(0..=len);
                let token = TOKENS[rng.gen_range(0..TOKENS.len())].as_bytes();
                bytes.splice(i..i, token.iter().copied());
            }
            3 => {
                let mut lines: Vec<Vec<u8>> = bytes.split(|&c| c == b'\n').map(<[u8]>::to_vec).collect();
                let (a, b) = (rng.gen_range(0..lines.len()), rng.gen_range(0..lines.len()));
                lines.swap(a, b);
                bytes = lines.join(&b'\n');
            }
            4 => {
                let mut lines: Vec<Vec<u8>> = bytes.split(|&c| c == b'\n').map(<[u8]>::to_vec).collect();
                let a = rng.gen_range(0..lines.len());
                let copy = lines[a].clone();
                lines.insert(rng.gen_range(0..=lines.len()), copy);
                bytes = lines.join(&b'\n');
            }
            _ if len > 0 => bytes.truncate(rng.gen_range(0..len)),
            _ => {}
        }
    }
    bytes
}

fn parser_totality() -> Outcome {
    let mut corpus: Vec<Vec<u8>> = SCENARIOS.iter().map(|s| s.text.as_bytes().to_vec()).collect();
    corpus.extend((0..4).map(|seed| generate(&GeneratorConfig::new(40, seed)).render().into_bytes()));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut parsed, mut rejected) = (0u64, 0u64);
    let previous_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut crash = None;
    for i in 0..FUZZ_FILES {
        let base = corpus[rng.gen_range(0..corpus.len())].clone();
        let bytes = mutate(&mut rng, base);
        let lines = bytes.iter().filter(|&&b| b == b'\n').count() + 1;
        let result = panic::catch_unwind(AssertUnwindSafe(|| match parse_trace_bytes(&bytes) {
            Ok(trace) => {
                let _ = replay(&trace, EnvironmentBit::Unsecure, ExceptionStore::default());
                Ok(true)
            }
            Err(e) if (1..=lines).contains(&e.line) => Ok(false),
            Err(e) => Err(format!("error outside the file: {e}")),
        }));
        match result {
            Ok(Ok(true)) => parsed += 1,
            Ok(Ok(false)) => rejected += 1,
            Ok(Err(e)) => {
                crash = Some(format!("file {i}: {e}"));
                break;
            }
            Err(p) => {
                crash = Some(format!("file {i} crashed: {}", panic_text(&*p)));
                break;
            }
        }
    }
    panic::set_hook(previous_hook);
    if let Some(c) = crash {
        return Err(c);
    }
    Ok(format!("{FUZZ_FILES} files: {parsed} parsed, {rejected} rejected with a line number, 0 crashes"))
}
