//! Seeded random traces for the property suites.
//!
//! Generated traces are valid under every environment bit and store: the
//! generator only refers back to entities whose creation cannot be refused
//! (children of fork, files created or copied into world-writable
//! directories, snapshot files). Entities whose creation may be refused are
//! never referenced again.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Snapshot, Trace};
use crate::model::{
    parse_perms, Capability, Event, EventKind, Fid, FileRecord, IpcChannel, Key, MountId, Pid,
    ProcessRecord, TaintState, UserRecord,
};

/// Relative weights per event kind.
#[derive(Debug, Clone, Copy)]
pub struct EventWeights {
    pub fork: u32,
    pub exec: u32,
    pub net: u32,
    pub login: u32,
    pub mount: u32,
    pub unmount: u32,
    pub copy: u32,
    pub create: u32,
    pub write: u32,
    pub read: u32,
    pub ipc: u32,
    pub priv_op: u32,
}

impl Default for EventWeights {
    fn default() -> Self {
        EventWeights {
            fork: 6,
            exec: 10,
            net: 5,
            login: 3,
            mount: 2,
            unmount: 2,
            copy: 6,
            create: 10,
            write: 16,
            read: 16,
            ipc: 8,
            priv_op: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub events: usize,
    pub seed: u64,
    pub weights: EventWeights,
    /// Probability that a NET event has a remote peer and that a LOGIN is by
    /// an untrusted user.
    pub entrance_density: f64,
    /// No remote peers, no untrusted logins, no mounts.
    pub suppress_entrances: bool,
}

impl GeneratorConfig {
    pub fn new(events: usize, seed: u64) -> Self {
        GeneratorConfig {
            events,
            seed,
            weights: EventWeights::default(),
            entrance_density: 0.25,
            suppress_entrances: false,
        }
    }
}

const CAPS: [&str; 8] = [
    "CAP_SYS_MODULE",
    "CAP_SYS_PTRACE",
    "CAP_NET_BIND_SERVICE",
    "CAP_NET_ADMIN",
    "CAP_CHOWN",
    "CAP_KILL",
    "CAP_SETUID",
    "CAP_DAC_OVERRIDE",
];
const PERMS: [&str; 9] = ["755", "700", "711", "644", "600", "640", "666", "777", "775"];
const USERS: [(&str, bool); 5] = [
    ("root", true),
    ("admin", true),
    ("alice", true),
    ("guest", false),
    ("mallory", false),
];
const MOUNT_POINTS: usize = 4;

#[derive(Clone)]
struct Dir {
    path: String,
    world_writable: bool,
}

struct State {
    rng: ChaCha8Rng,
    pids: Vec<Pid>,
    next_pid: Pid,
    next_fid: Fid,
    next_mount: MountId,
    next_name: u64,
    /// Non-directory files that certainly exist.
    files: Vec<Fid>,
    paths: HashMap<Fid, String>,
    executables: Vec<Fid>,
    /// Directories that certainly exist.
    dirs: Vec<Dir>,
    /// Mount-point index -> live mount id.
    mounted: [Option<MountId>; MOUNT_POINTS],
}

impl State {
    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty pool")
    }

    fn pid(&mut self) -> Pid {
        let pids = std::mem::take(&mut self.pids);
        let pid = self.pick(&pids);
        self.pids = pids;
        pid
    }

    fn fid(&mut self) -> Fid {
        let fid = self.next_fid;
        self.next_fid += 1;
        fid
    }

    fn name(&mut self) -> String {
        self.next_name += 1;
        format!("n{}", self.next_name)
    }

    fn perms(&mut self) -> crate::model::PermissionBits {
        parse_perms(self.pick(&PERMS)).expect("valid literal")
    }
}

fn file(fid: Fid, path: &str, mode: &str, dir: bool) -> FileRecord {
    FileRecord {
        fid,
        path: path.to_string(),
        perms: parse_perms(mode).expect("valid literal"),
        owner: "root".to_string(),
        taint: TaintState::NonIntrusion,
        is_directory: dir,
        on_mobile_mount: false,
    }
}

fn mount_point(i: usize) -> String {
    format!("/mnt/m{i}")
}

/// Builds the fixed starting filesystem and process table.
fn snapshot(state: &mut State) -> Snapshot {
    let mut files = Vec::new();
    let dirs: [(&str, &str); 10] = [
        ("/", "755"),
        ("/bin", "755"),
        ("/usr", "755"),
        ("/usr/bin", "755"),
        ("/etc", "755"),
        ("/tmp", "777"),
        ("/var", "755"),
        ("/var/tmp", "777"),
        ("/home", "755"),
        ("/mnt", "755"),
    ];
    for (path, mode) in dirs {
        let fid = state.fid();
        files.push(file(fid, path, mode, true));
        state.dirs.push(Dir {
            path: path.to_string(),
            world_writable: mode == "777",
        });
    }
    for i in 0..MOUNT_POINTS {
        let fid = state.fid();
        let path = mount_point(i);
        files.push(file(fid, &path, "777", true));
        state.dirs.push(Dir { path, world_writable: true });
    }
    let plain: [(&str, &str); 16] = [
        ("/bin/sh", "755"),
        ("/bin/ls", "755"),
        ("/bin/cp", "755"),
        ("/usr/bin/httpd", "755"),
        ("/usr/bin/ssh", "755"),
        ("/usr/bin/yum", "755"),
        ("/usr/bin/browser", "755"),
        ("/etc/passwd", "644"),
        ("/etc/shadow", "600"),
        ("/etc/hosts", "644"),
        ("/etc/sudoers", "440"),
        ("/tmp/shared", "666"),
        ("/tmp/tool", "777"),
        ("/var/tmp/cache", "666"),
        ("/home/notes", "644"),
        ("/home/run", "700"),
    ];
    for (path, mode) in plain {
        let fid = state.fid();
        let record = file(fid, path, mode, false);
        state.paths.insert(fid, record.path.clone());
        if record.executable() {
            state.executables.push(fid);
        }
        state.files.push(fid);
        files.push(record);
    }
    for i in 0..MOUNT_POINTS {
        for (name, mode) in [("run", "755"), ("data", "644")] {
            let fid = state.fid();
            let record = file(fid, &format!("{}/{name}", mount_point(i)), mode, false);
            state.paths.insert(fid, record.path.clone());
            if record.executable() {
                state.executables.push(fid);
            }
            state.files.push(fid);
            files.push(record);
        }
    }
    let users = USERS
        .iter()
        .map(|&(name, trusted)| UserRecord { name: name.to_string(), trusted })
        .collect();
    let mut processes = Vec::new();
    for i in 0..6 {
        let pid = state.next_pid;
        state.next_pid += 1;
        let key = state.executables[i % 4];
        processes.push(ProcessRecord {
            pid,
            key: Key(key),
            taint: TaintState::NonIntrusion,
            user: "root".to_string(),
            parent: None,
        });
        state.pids.push(pid);
    }
    Snapshot {
        label: None,
        users,
        files,
        processes,
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Fork,
    Exec,
    Net,
    Login,
    Mount,
    Unmount,
    Copy,
    Create,
    Write,
    Read,
    Ipc,
    Priv,
}

pub fn generate(config: &GeneratorConfig) -> Trace {
    let mut state = State {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        pids: Vec::new(),
        next_pid: 1,
        next_fid: 1,
        next_mount: 1,
        next_name: 0,
        files: Vec::new(),
        paths: HashMap::new(),
        executables: Vec::new(),
        dirs: Vec::new(),
        mounted: [None; MOUNT_POINTS],
    };
    let snapshot = snapshot(&mut state);
    let w = config.weights;
    let mut table = vec![
        (Kind::Fork, w.fork),
        (Kind::Exec, w.exec),
        (Kind::Net, w.net),
        (Kind::Login, w.login),
        (Kind::Copy, w.copy),
        (Kind::Create, w.create),
        (Kind::Write, w.write),
        (Kind::Read, w.read),
        (Kind::Ipc, w.ipc),
        (Kind::Priv, w.priv_op),
    ];
    if !config.suppress_entrances {
        table.push((Kind::Mount, w.mount));
        table.push((Kind::Unmount, w.unmount));
    }
    let total: u32 = table.iter().map(|(_, w)| w).sum();
    assert!(total > 0, "at least one event kind needs weight");

    let mut events = Vec::with_capacity(config.events);
    while events.len() < config.events {
        let mut roll = state.rng.gen_range(0..total);
        let kind = table
            .iter()
            .find(|(_, weight)| {
                if roll < *weight {
                    true
                } else {
                    roll -= weight;
                    false
                }
            })
            .map(|(k, _)| *k)
            .expect("roll below total");
        if let Some(kind) = next_event(&mut state, kind, config) {
            events.push(Event {
                seq: events.len() as u64 + 1,
                kind,
            });
        }
    }
    Trace { snapshot, events }
}

fn next_event(s: &mut State, kind: Kind, config: &GeneratorConfig) -> Option<EventKind> {
    let entrance = !config.suppress_entrances && s.rng.gen_bool(config.entrance_density);
    Some(match kind {
        Kind::Fork => {
            let parent = s.pid();
            let child = s.next_pid;
            s.next_pid += 1;
            s.pids.push(child);
            EventKind::Fork { parent, child }
        }
        Kind::Exec => {
            let pid = s.pid();
            let execs = std::mem::take(&mut s.executables);
            let fid = s.pick(&execs);
            s.executables = execs;
            EventKind::Exec { pid, fid }
        }
        Kind::Net => {
            let pid = s.pid();
            let peer = if entrance {
                format!("198.51.100.{}", s.rng.gen_range(1..255))
            } else if s.rng.gen_bool(0.5) {
                "127.0.0.1".to_string()
            } else {
                "::1".to_string()
            };
            EventKind::RemoteComm { pid, peer }
        }
        Kind::Login => {
            let pid = s.pid();
            let pool: Vec<&str> = USERS
                .iter()
                .filter(|(_, trusted)| *trusted != entrance)
                .map(|(n, _)| *n)
                .collect();
            let user = s.pick(&pool).to_string();
            EventKind::Login { pid, user }
        }
        Kind::Mount => {
            let free: Vec<usize> = (0..MOUNT_POINTS).filter(|&i| s.mounted[i].is_none()).collect();
            if free.is_empty() {
                return None;
            }
            let i = s.pick(&free);
            let id = s.next_mount;
            s.next_mount += 1;
            s.mounted[i] = Some(id);
            EventKind::Mount { id, prefix: mount_point(i) }
        }
        Kind::Unmount => {
            let live: Vec<usize> = (0..MOUNT_POINTS).filter(|&i| s.mounted[i].is_some()).collect();
            if live.is_empty() {
                return None;
            }
            let i = s.pick(&live);
            let id = s.mounted[i].take().expect("live mount");
            EventKind::Unmount { id }
        }
        Kind::Copy => {
            let pid = s.pid();
            let files = std::mem::take(&mut s.files);
            let src = s.pick(&files);
            let overwrite = s.pick(&files);
            s.files = files;
            let dst_perms = s.perms();
            if s.rng.gen_bool(0.2) {
                // overwrite an existing file, which keeps its fid
                return Some(EventKind::Copy {
                    pid,
                    src,
                    dst_path: s.paths[&overwrite].clone(),
                    dst_perms,
                    dst_owner: "root".into(),
                    dst_fid: overwrite,
                });
            }
            let dst_fid = s.fid();
            let writable = s.rng.gen_bool(0.6);
            let dir = pick_dir(s, writable);
            let name = s.name();
            let dst_path = join(&dir.path, &name);
            let tracked = dir.world_writable;
            if tracked {
                s.paths.insert(dst_fid, dst_path.clone());
                s.files.push(dst_fid);
                if dst_perms.any_exec() {
                    s.executables.push(dst_fid);
                }
            }
            EventKind::Copy {
                pid,
                src,
                dst_path,
                dst_perms,
                dst_owner: "root".into(),
                dst_fid,
            }
        }
        Kind::Create => {
            let pid = s.pid();
            let writable = s.rng.gen_bool(0.65);
            let dir = pick_dir(s, writable);
            let path = join(&dir.path, &s.name());
            let is_directory = s.rng.gen_bool(0.1);
            let perms = s.perms();
            let fid = s.fid();
            if dir.world_writable {
                if is_directory {
                    s.dirs.push(Dir {
                        path: path.clone(),
                        world_writable: perms.other_write,
                    });
                } else {
                    s.paths.insert(fid, path.clone());
                    s.files.push(fid);
                    if perms.any_exec() {
                        s.executables.push(fid);
                    }
                }
            }
            EventKind::Create {
                pid,
                path,
                perms,
                owner: "root".into(),
                is_directory,
                fid,
            }
        }
        Kind::Write | Kind::Read => {
            let pid = s.pid();
            let files = std::mem::take(&mut s.files);
            let fid = s.pick(&files);
            s.files = files;
            if matches!(kind, Kind::Write) {
                EventKind::Write { pid, fid }
            } else {
                EventKind::Read { pid, fid }
            }
        }
        Kind::Ipc => {
            let from = s.pid();
            let mut to = s.pid();
            while to == from {
                to = s.pid();
            }
            let channel = s.pick(&[
                IpcChannel::Pipe,
                IpcChannel::Signal,
                IpcChannel::SocketLocal,
                IpcChannel::SharedMemory,
            ]);
            EventKind::Ipc { from, to, channel }
        }
        Kind::Priv => {
            let pid = s.pid();
            let name = s.pick(&CAPS);
            EventKind::PrivOp {
                pid,
                capability: Capability::new(name).expect("valid literal"),
            }
        }
    })
}

fn pick_dir(s: &mut State, world_writable: bool) -> Dir {
    let pool: Vec<usize> = (0..s.dirs.len())
        .filter(|&i| s.dirs[i].world_writable == world_writable)
        .collect();
    let idx = if pool.is_empty() {
        s.rng.gen_range(0..s.dirs.len())
    } else {
        s.pick(&pool)
    };
    s.dirs[idx].clone()
}

fn join(dir: &str, name: &str) -> String {
    if dir == "/" {
        format!("/{name}")
    } else {
        format!("{dir}/{name}")
    }
}

/// Shuffles every maximal run of consecutive PRIV/READ/WRITE events. Such
/// events never change a process's label or key, and a write only labels
/// the written file, so the reordered trace reaches the same final state and
/// asks the same exception questions.
pub fn permute_critical_runs(trace: &Trace, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds: Vec<EventKind> = trace.events.iter().map(|e| e.kind.clone()).collect();
    let critical = |k: &EventKind| {
        matches!(
            k,
            EventKind::PrivOp { .. } | EventKind::Read { .. } | EventKind::Write { .. }
        )
    };
    let mut start = 0;
    while start < kinds.len() {
        if !critical(&kinds[start]) {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < kinds.len() && critical(&kinds[end]) {
            end += 1;
        }
        kinds[start..end].shuffle(&mut rng);
        start = end;
    }
    Trace {
        snapshot: trace.snapshot.clone(),
        events: kinds
            .into_iter()
            .enumerate()
            .map(|(i, kind)| Event { seq: i as u64 + 1, kind })
            .collect(),
    }
}
