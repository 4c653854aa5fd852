//! The taint-tracing reference monitor.
//!
//! Every event is decided against the state as it was before the event.
//! Entrance events (remote communication, untrusted login, execution or copy
//! of removable-media files) label processes and executables as potential
//! intrusions; fork, exec, ipc and writes spread the label; only privileged
//! operations, writes to integrity-protected files and reads of
//! sensitivity-protected files by labelled processes are ever refused. A
//! refused event changes nothing but the decision log.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{ConfigError, TraceError, TraceErrorKind};
use crate::exceptions::{AccessMode, EnvironmentBit, ExceptionStore, FileExceptionEntry};
use crate::model::{
    is_canonical_path, parent_path, path_under, Capability, Decision, EntityId, Event, EventKind,
    ExceptionKind, Fid, FileRecord, IpcChannel, Key, MountId, PermissionBits, Pid, ProcessRecord,
    Reason, TaintState, TaintUpdate, UserRecord,
};

pub const DEFAULT_LOOPBACK_PREFIXES: [&str; 2] = ["127.", "::1"];

/// Files without the other-write bit need integrity protection.
pub fn is_integrity_protected(file: &FileRecord) -> bool {
    !file.perms.other_write
}

/// Files without the other-read bit need sensitivity protection.
pub fn is_sensitivity_protected(file: &FileRecord) -> bool {
    !file.perms.other_read
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub users: Vec<UserRecord>,
    pub loopback_prefixes: Vec<String>,
    pub files: Vec<FileRecord>,
    pub processes: Vec<ProcessRecord>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            users: Vec::new(),
            loopback_prefixes: DEFAULT_LOOPBACK_PREFIXES.iter().map(|s| s.to_string()).collect(),
            files: Vec::new(),
            processes: Vec::new(),
        }
    }
}

impl EngineConfig {
    pub fn trusted_users(&self) -> BTreeSet<&str> {
        self.users
            .iter()
            .filter(|u| u.trusted)
            .map(|u| u.name.as_str())
            .collect()
    }
}

/// What a mediated operation targets, for exception lookup and recording.
enum Target<'a> {
    File(Fid, AccessMode),
    Privilege(&'a Capability),
}

/// Outcome of the critical-operation gate, before any mutation.
enum Gate {
    Open,
    Learn(Reason),
    Excepted(Reason, ExceptionKind),
    Denied(Reason),
}

pub struct Engine {
    processes: HashMap<Pid, ProcessRecord>,
    files: HashMap<Fid, FileRecord>,
    paths: BTreeMap<String, Fid>,
    mounts: BTreeMap<MountId, String>,
    mount_points: HashSet<String>,
    users: HashMap<String, bool>,
    loopback_prefixes: Vec<String>,
    store: ExceptionStore,
    log: Vec<(Event, Decision)>,
    last_seq: Option<u64>,
}

impl Engine {
    pub fn new(config: EngineConfig, store: ExceptionStore) -> Result<Self, ConfigError> {
        let mut users = HashMap::new();
        for user in config.users {
            if users.insert(user.name.clone(), user.trusted).is_some() {
                return Err(ConfigError::DuplicateUser(user.name));
            }
        }
        let mut files = HashMap::new();
        let mut paths = BTreeMap::new();
        for file in config.files {
            if file.taint.is_tainted() {
                return Err(ConfigError::TaintedSeed(EntityId::File(file.fid).to_string()));
            }
            if !is_canonical_path(&file.path) {
                return Err(ConfigError::BadPath(file.path));
            }
            if files.contains_key(&file.fid) {
                return Err(ConfigError::DuplicateFid(file.fid));
            }
            if paths.contains_key(&file.path) {
                return Err(ConfigError::DuplicatePath(file.path));
            }
            paths.insert(file.path.clone(), file.fid);
            files.insert(file.fid, FileRecord { on_mobile_mount: false, ..file });
        }
        let mut processes = HashMap::new();
        for process in config.processes {
            if process.taint.is_tainted() {
                return Err(ConfigError::TaintedSeed(EntityId::Process(process.pid).to_string()));
            }
            if processes.contains_key(&process.pid) {
                return Err(ConfigError::DuplicatePid(process.pid));
            }
            processes.insert(process.pid, process);
        }
        Ok(Engine {
            processes,
            files,
            paths,
            mounts: BTreeMap::new(),
            mount_points: HashSet::new(),
            users,
            loopback_prefixes: config.loopback_prefixes,
            store,
            log: Vec::new(),
            last_seq: None,
        })
    }

    pub fn mode(&self) -> EnvironmentBit {
        self.store.bit()
    }

    pub fn store(&self) -> &ExceptionStore {
        &self.store
    }

    pub fn into_store(self) -> ExceptionStore {
        self.store
    }

    pub fn decision_log(&self) -> &[(Event, Decision)] {
        &self.log
    }

    pub fn into_parts(self) -> (Vec<(Event, Decision)>, ExceptionStore) {
        (self.log, self.store)
    }

    pub fn process(&self, pid: Pid) -> Option<&ProcessRecord> {
        self.processes.get(&pid)
    }

    /// A file's record, with `on_mobile_mount` reflecting the live mounts.
    pub fn file(&self, fid: Fid) -> Option<FileRecord> {
        self.files.get(&fid).map(|f| FileRecord {
            on_mobile_mount: self.under_live_mount(&f.path),
            ..f.clone()
        })
    }

    pub fn file_by_path(&self, path: &str) -> Option<FileRecord> {
        self.paths.get(path).and_then(|&fid| self.file(fid))
    }

    pub fn process_count(&self) -> usize {
        self.processes.len()
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    /// Exception list of a file or directory, as held by the store.
    pub fn file_exceptions(&self, fid: Fid) -> Vec<FileExceptionEntry> {
        self.store.file_entries(fid)
    }

    pub fn live_mounts(&self) -> impl Iterator<Item = (MountId, &str)> {
        self.mounts.iter().map(|(&id, p)| (id, p.as_str()))
    }

    pub fn tainted_entities(&self) -> BTreeSet<EntityId> {
        let procs = self
            .processes
            .values()
            .filter(|p| p.taint.is_tainted())
            .map(|p| EntityId::Process(p.pid));
        let files = self
            .files
            .values()
            .filter(|f| f.taint.is_tainted())
            .map(|f| EntityId::File(f.fid));
        procs.chain(files).collect()
    }

    /// Applies one event and appends it to the decision log.
    pub fn step(&mut self, event: &Event) -> Result<Decision, TraceError> {
        if let Some(prev) = self.last_seq {
            if event.seq <= prev {
                return Err(TraceError {
                    seq: event.seq,
                    kind: TraceErrorKind::Sequence { prev, got: event.seq },
                });
            }
        }
        let decision = self
            .dispatch(&event.kind)
            .map_err(|kind| TraceError { seq: event.seq, kind })?;
        self.last_seq = Some(event.seq);
        self.log.push((event.clone(), decision.clone()));
        Ok(decision)
    }

    fn dispatch(&mut self, kind: &EventKind) -> Result<Decision, TraceErrorKind> {
        match kind {
            EventKind::Fork { parent, child } => self.on_fork(*parent, *child),
            EventKind::Exec { pid, fid } => self.on_exec(*pid, *fid),
            EventKind::RemoteComm { pid, peer } => self.on_remote_comm(*pid, peer),
            EventKind::Login { pid, user } => self.on_login(*pid, user),
            EventKind::Mount { id, prefix } => self.on_mount(*id, prefix),
            EventKind::Unmount { id } => self.on_unmount(*id),
            EventKind::Copy {
                pid,
                src,
                dst_path,
                dst_perms,
                dst_owner,
                dst_fid,
            } => self.on_copy(*pid, *src, dst_path, *dst_perms, dst_owner, *dst_fid),
            EventKind::Create {
                pid,
                path,
                perms,
                owner,
                is_directory,
                fid,
            } => self.on_file_create(*pid, path, *perms, owner, *is_directory, *fid),
            EventKind::Write { pid, fid } => self.on_file_write(*pid, *fid),
            EventKind::Read { pid, fid } => self.on_file_read(*pid, *fid),
            EventKind::Ipc { from, to, channel } => self.on_ipc(*from, *to, *channel),
            EventKind::PrivOp { pid, capability } => self.on_priv_op(*pid, capability),
        }
    }

    fn live_process(&self, pid: Pid) -> Result<&ProcessRecord, TraceErrorKind> {
        self.processes.get(&pid).ok_or(TraceErrorKind::UnknownPid(pid))
    }

    fn live_file(&self, fid: Fid) -> Result<&FileRecord, TraceErrorKind> {
        self.files.get(&fid).ok_or(TraceErrorKind::UnknownFid(fid))
    }

    /// Whether `path` or one of its ancestors is a live mount point; cost is
    /// proportional to the path depth, not to the number of files.
    fn under_live_mount(&self, path: &str) -> bool {
        if self.mount_points.is_empty() {
            return false;
        }
        let mut current = Some(path);
        while let Some(p) = current {
            if self.mount_points.contains(p) {
                return true;
            }
            current = parent_path(p);
        }
        false
    }

    /// Existing parent directory of a path about to be created.
    fn parent_dir(&self, path: &str) -> Result<&FileRecord, TraceErrorKind> {
        if !is_canonical_path(path) || path == "/" {
            return Err(TraceErrorKind::BadPath(path.to_string()));
        }
        let parent = parent_path(path).ok_or_else(|| TraceErrorKind::BadPath(path.to_string()))?;
        let fid = self
            .paths
            .get(parent)
            .ok_or_else(|| TraceErrorKind::ParentMissing(path.to_string()))?;
        let dir = &self.files[fid];
        if !dir.is_directory {
            return Err(TraceErrorKind::ParentNotDirectory(path.to_string()));
        }
        Ok(dir)
    }

    /// Decides a security-critical operation by a potential-intrusion process.
    fn gate(&self, key: Key, reason: Reason, target: &Target<'_>) -> Gate {
        if self.store.bit() == EnvironmentBit::Secure {
            return Gate::Learn(reason);
        }
        match *target {
            Target::File(fid, mode) if self.store.check_file_exception(key, fid, mode) => {
                Gate::Excepted(reason, ExceptionKind::FileList)
            }
            Target::Privilege(cap) if self.store.check_priv_exception(key, cap) => {
                Gate::Excepted(reason, ExceptionKind::PrivilegeList)
            }
            _ => Gate::Denied(reason),
        }
    }

    /// Turns a non-denying gate into the base decision, recording the
    /// exception when learning.
    fn pass(&mut self, gate: Gate, key: Key, target: Target<'_>) -> Decision {
        match gate {
            Gate::Open => Decision::allow(),
            Gate::Excepted(reason, kind) => Decision::by_exception(reason, kind),
            Gate::Learn(reason) => {
                let recorded = match target {
                    Target::File(fid, mode) => self.store.record_file_exception(key, fid, mode),
                    Target::Privilege(cap) => self.store.record_priv_exception(key, cap),
                };
                debug_assert!(recorded.is_ok(), "secure mode always records");
                Decision::learned(reason)
            }
            Gate::Denied(reason) => Decision::deny(reason),
        }
    }

    fn taint_process(&mut self, pid: Pid, updates: &mut Vec<TaintUpdate>) {
        let process = self.processes.get_mut(&pid).expect("validated pid");
        if !process.taint.is_tainted() {
            process.taint = TaintState::PotentialIntrusion;
            updates.push(tainted(EntityId::Process(pid)));
        }
    }

    fn taint_file(&mut self, fid: Fid, updates: &mut Vec<TaintUpdate>) {
        let file = self.files.get_mut(&fid).expect("validated fid");
        debug_assert!(file.executable(), "only executables carry taint");
        if !file.taint.is_tainted() {
            file.taint = TaintState::PotentialIntrusion;
            updates.push(tainted(EntityId::File(fid)));
        }
    }

    pub fn on_fork(&mut self, parent: Pid, child: Pid) -> Result<Decision, TraceErrorKind> {
        let parent_rec = self.live_process(parent)?;
        if self.processes.contains_key(&child) {
            return Err(TraceErrorKind::PidInUse(child));
        }
        let record = ProcessRecord {
            pid: child,
            key: parent_rec.key,
            taint: TaintState::NonIntrusion,
            user: parent_rec.user.clone(),
            parent: Some(parent),
        };
        let inherit = parent_rec.taint.is_tainted();
        self.processes.insert(child, record);
        let mut decision = Decision::allow();
        if inherit {
            self.taint_process(child, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_exec(&mut self, pid: Pid, fid: Fid) -> Result<Decision, TraceErrorKind> {
        let process_tainted = self.live_process(pid)?.taint.is_tainted();
        let file = self.live_file(fid)?;
        if !file.executable() {
            return Err(TraceErrorKind::NotExecutable(fid));
        }
        let mobile = self.under_live_mount(&file.path);
        let file_tainted = file.taint.is_tainted();
        let mut decision = Decision::allow();
        if mobile {
            self.taint_file(fid, &mut decision.taint_updates);
        }
        self.processes.get_mut(&pid).expect("validated pid").key = Key(fid);
        if !process_tainted && (file_tainted || mobile) {
            self.taint_process(pid, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_remote_comm(&mut self, pid: Pid, peer: &str) -> Result<Decision, TraceErrorKind> {
        self.live_process(pid)?;
        let local = self
            .loopback_prefixes
            .iter()
            .any(|prefix| peer.starts_with(prefix.as_str()));
        let mut decision = Decision::allow();
        if !local {
            self.taint_process(pid, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_login(&mut self, pid: Pid, user: &str) -> Result<Decision, TraceErrorKind> {
        self.live_process(pid)?;
        let trusted = *self
            .users
            .get(user)
            .ok_or_else(|| TraceErrorKind::UnknownUser(user.to_string()))?;
        self.processes.get_mut(&pid).expect("validated pid").user = user.to_string();
        let mut decision = Decision::allow();
        if !trusted {
            self.taint_process(pid, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_mount(&mut self, id: MountId, prefix: &str) -> Result<Decision, TraceErrorKind> {
        if !is_canonical_path(prefix) {
            return Err(TraceErrorKind::BadPath(prefix.to_string()));
        }
        if self.mounts.contains_key(&id) {
            return Err(TraceErrorKind::MountInUse(id));
        }
        if let Some(other) = self
            .mounts
            .values()
            .find(|live| path_under(prefix, live) || path_under(live, prefix))
        {
            return Err(TraceErrorKind::MountOverlap(prefix.to_string(), other.clone()));
        }
        self.mounts.insert(id, prefix.to_string());
        self.mount_points.insert(prefix.to_string());
        Ok(Decision::allow())
    }

    pub fn on_unmount(&mut self, id: MountId) -> Result<Decision, TraceErrorKind> {
        let prefix = self.mounts.remove(&id).ok_or(TraceErrorKind::UnknownMount(id))?;
        self.mount_points.remove(&prefix);
        Ok(Decision::allow())
    }

    pub fn on_copy(
        &mut self,
        pid: Pid,
        src: Fid,
        dst_path: &str,
        dst_perms: PermissionBits,
        dst_owner: &str,
        dst_fid: Fid,
    ) -> Result<Decision, TraceErrorKind> {
        let process = self.live_process(pid)?;
        let (key, pid_tainted) = (process.key, process.taint.is_tainted());
        let source = self.live_file(src)?;
        let (src_mobile, src_tainted, src_executable) =
            (self.under_live_mount(&source.path), source.taint.is_tainted(), source.executable());

        // Existing destination: overwrite in place, keeping its mode bits.
        let existing = self.paths.get(dst_path).copied();
        let (checked_fid, protected, dst_executable) = match existing {
            Some(fid) => {
                let dst = &self.files[&fid];
                if dst.is_directory {
                    return Err(TraceErrorKind::CopyOntoDirectory(dst_path.to_string()));
                }
                (fid, is_integrity_protected(dst), dst.executable())
            }
            None => {
                let dir = self.parent_dir(dst_path)?;
                if self.files.contains_key(&dst_fid) {
                    return Err(TraceErrorKind::FidInUse(dst_fid));
                }
                (dir.fid, is_integrity_protected(dir), dst_perms.any_exec())
            }
        };

        let gate = if pid_tainted && protected {
            self.gate(key, Reason::IntegrityWrite, &Target::File(checked_fid, AccessMode::Write))
        } else {
            Gate::Open
        };
        if let Gate::Denied(reason) = gate {
            return Ok(Decision::deny(reason));
        }
        let mut decision = self.pass(gate, key, Target::File(checked_fid, AccessMode::Write));

        let target = match existing {
            Some(fid) => fid,
            None => {
                let record = FileRecord {
                    fid: dst_fid,
                    path: dst_path.to_string(),
                    perms: dst_perms,
                    owner: dst_owner.to_string(),
                    taint: TaintState::NonIntrusion,
                    is_directory: false,
                    on_mobile_mount: false,
                };
                self.paths.insert(record.path.clone(), dst_fid);
                self.files.insert(dst_fid, record);
                dst_fid
            }
        };
        if src_mobile && src_executable {
            self.taint_file(src, &mut decision.taint_updates);
        }
        if dst_executable && (src_mobile || src_tainted || pid_tainted) {
            self.taint_file(target, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_ipc(&mut self, from: Pid, to: Pid, channel: IpcChannel) -> Result<Decision, TraceErrorKind> {
        if from == to {
            return Err(TraceErrorKind::SelfIpc(from));
        }
        let from_tainted = self.live_process(from)?.taint.is_tainted();
        let to_tainted = self.live_process(to)?.taint.is_tainted();
        let mut decision = Decision::allow();
        if from_tainted {
            self.taint_process(to, &mut decision.taint_updates);
        }
        if channel.is_bidirectional() && to_tainted {
            self.taint_process(from, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_file_create(
        &mut self,
        pid: Pid,
        path: &str,
        perms: PermissionBits,
        owner: &str,
        is_directory: bool,
        fid: Fid,
    ) -> Result<Decision, TraceErrorKind> {
        let process = self.live_process(pid)?;
        let (key, pid_tainted) = (process.key, process.taint.is_tainted());
        if self.paths.contains_key(path) {
            return Err(TraceErrorKind::PathExists(path.to_string()));
        }
        let dir = self.parent_dir(path)?;
        let (dir_fid, protected) = (dir.fid, is_integrity_protected(dir));
        if self.files.contains_key(&fid) {
            return Err(TraceErrorKind::FidInUse(fid));
        }

        let gate = if pid_tainted && protected {
            self.gate(key, Reason::IntegrityWrite, &Target::File(dir_fid, AccessMode::Write))
        } else {
            Gate::Open
        };
        if let Gate::Denied(reason) = gate {
            return Ok(Decision::deny(reason));
        }
        let mut decision = self.pass(gate, key, Target::File(dir_fid, AccessMode::Write));

        let record = FileRecord {
            fid,
            path: path.to_string(),
            perms,
            owner: owner.to_string(),
            taint: TaintState::NonIntrusion,
            is_directory,
            on_mobile_mount: false,
        };
        let executable = record.executable();
        self.paths.insert(record.path.clone(), fid);
        self.files.insert(fid, record);
        if pid_tainted && executable {
            self.taint_file(fid, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_file_write(&mut self, pid: Pid, fid: Fid) -> Result<Decision, TraceErrorKind> {
        let process = self.live_process(pid)?;
        let (key, pid_tainted) = (process.key, process.taint.is_tainted());
        let file = self.live_file(fid)?;
        let (protected, executable) = (is_integrity_protected(file), file.executable());

        let gate = if pid_tainted && protected {
            self.gate(key, Reason::IntegrityWrite, &Target::File(fid, AccessMode::Write))
        } else {
            Gate::Open
        };
        if let Gate::Denied(reason) = gate {
            return Ok(Decision::deny(reason));
        }
        let mut decision = self.pass(gate, key, Target::File(fid, AccessMode::Write));
        if pid_tainted && executable {
            self.taint_file(fid, &mut decision.taint_updates);
        }
        Ok(decision)
    }

    pub fn on_file_read(&mut self, pid: Pid, fid: Fid) -> Result<Decision, TraceErrorKind> {
        let process = self.live_process(pid)?;
        let (key, pid_tainted) = (process.key, process.taint.is_tainted());
        let protected = is_sensitivity_protected(self.live_file(fid)?);

        let gate = if pid_tainted && protected {
            self.gate(key, Reason::SensitivityRead, &Target::File(fid, AccessMode::Read))
        } else {
            Gate::Open
        };
        if let Gate::Denied(reason) = gate {
            return Ok(Decision::deny(reason));
        }
        Ok(self.pass(gate, key, Target::File(fid, AccessMode::Read)))
    }

    pub fn on_priv_op(&mut self, pid: Pid, capability: &Capability) -> Result<Decision, TraceErrorKind> {
        let process = self.live_process(pid)?;
        let (key, pid_tainted) = (process.key, process.taint.is_tainted());

        let gate = if pid_tainted {
            self.gate(key, Reason::PrivilegedOp, &Target::Privilege(capability))
        } else {
            Gate::Open
        };
        if let Gate::Denied(reason) = gate {
            return Ok(Decision::deny(reason));
        }
        Ok(self.pass(gate, key, Target::Privilege(capability)))
    }
}

fn tainted(entity: EntityId) -> TaintUpdate {
    TaintUpdate {
        entity,
        old: TaintState::NonIntrusion,
        new: TaintState::PotentialIntrusion,
    }
}
