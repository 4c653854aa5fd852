//! Two-level Low-Water-Mark integrity engine over the same event vocabulary.
//!
//! A subject's level drops to the minimum of everything it observes, and a
//! subject may not modify an object above its own level. Level assignment
//! mirrors the taint entrances so both engines face the same threat surface:
//! remote-facing and untrusted-login processes fall to Low, and so does
//! everything under a mobile mount. Exec and IPC deliver data to the
//! subject, so they are treated as reads; a privileged operation is a write
//! to a notional High object.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Bound;

use crate::engine::EngineConfig;
use crate::error::{ConfigError, TraceError, TraceErrorKind};
use crate::model::{
    is_canonical_path, parent_path, path_under, EntityId, Event, EventKind, Fid, MountId, Pid,
    Reason, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntegrityLevel {
    Low,
    High,
}

impl fmt::Display for IntegrityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegrityLevel::Low => "low",
            IntegrityLevel::High => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelChange {
    pub entity: EntityId,
    pub old: IntegrityLevel,
    pub new: IntegrityLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LwmDecision {
    pub verdict: Verdict,
    pub reason: Option<Reason>,
    pub level_changes: Vec<LevelChange>,
}

impl LwmDecision {
    fn allow(level_changes: Vec<LevelChange>) -> Self {
        LwmDecision {
            verdict: Verdict::Allow,
            reason: None,
            level_changes,
        }
    }

    fn deny(reason: Reason) -> Self {
        LwmDecision {
            verdict: Verdict::Deny,
            reason: Some(reason),
            level_changes: Vec::new(),
        }
    }

    pub fn is_deny(&self) -> bool {
        self.verdict == Verdict::Deny
    }
}

#[derive(Debug, Clone)]
struct Object {
    path: String,
    level: IntegrityLevel,
    is_directory: bool,
    executable: bool,
}

#[derive(Debug, Clone)]
pub struct LwmEngine {
    subjects: HashMap<Pid, IntegrityLevel>,
    objects: HashMap<Fid, Object>,
    paths: BTreeMap<String, Fid>,
    mounts: BTreeMap<MountId, String>,
    users: HashMap<String, bool>,
    loopback_prefixes: Vec<String>,
    log: Vec<(Event, LwmDecision)>,
    last_seq: Option<u64>,
}

impl LwmEngine {
    /// Every seeded entity starts High; nothing is mounted yet.
    pub fn new(config: &EngineConfig) -> Result<Self, ConfigError> {
        let mut users = HashMap::new();
        for user in &config.users {
            if users.insert(user.name.clone(), user.trusted).is_some() {
                return Err(ConfigError::DuplicateUser(user.name.clone()));
            }
        }
        let mut objects = HashMap::new();
        let mut paths = BTreeMap::new();
        for file in &config.files {
            if !is_canonical_path(&file.path) {
                return Err(ConfigError::BadPath(file.path.clone()));
            }
            if paths.insert(file.path.clone(), file.fid).is_some() {
                return Err(ConfigError::DuplicatePath(file.path.clone()));
            }
            let object = Object {
                path: file.path.clone(),
                level: IntegrityLevel::High,
                is_directory: file.is_directory,
                executable: file.executable(),
            };
            if objects.insert(file.fid, object).is_some() {
                return Err(ConfigError::DuplicateFid(file.fid));
            }
        }
        let mut subjects = HashMap::new();
        for process in &config.processes {
            if subjects.insert(process.pid, IntegrityLevel::High).is_some() {
                return Err(ConfigError::DuplicatePid(process.pid));
            }
        }
        Ok(LwmEngine {
            subjects,
            objects,
            paths,
            mounts: BTreeMap::new(),
            users,
            loopback_prefixes: config.loopback_prefixes.clone(),
            log: Vec::new(),
            last_seq: None,
        })
    }

    pub fn subject_level(&self, pid: Pid) -> Option<IntegrityLevel> {
        self.subjects.get(&pid).copied()
    }

    pub fn object_level(&self, fid: Fid) -> Option<IntegrityLevel> {
        self.objects.get(&fid).map(|o| o.level)
    }

    pub fn decision_log(&self) -> &[(Event, LwmDecision)] {
        &self.log
    }

    pub fn into_decision_log(self) -> Vec<(Event, LwmDecision)> {
        self.log
    }

    /// Entities currently at Low.
    pub fn low_entities(&self) -> BTreeSet<EntityId> {
        let subjects = self
            .subjects
            .iter()
            .filter(|(_, l)| **l == IntegrityLevel::Low)
            .map(|(pid, _)| EntityId::Process(*pid));
        let objects = self
            .objects
            .iter()
            .filter(|(_, o)| o.level == IntegrityLevel::Low)
            .map(|(fid, _)| EntityId::File(*fid));
        subjects.chain(objects).collect()
    }

    pub fn step(&mut self, event: &Event) -> Result<LwmDecision, TraceError> {
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

    fn subject(&self, pid: Pid) -> Result<IntegrityLevel, TraceErrorKind> {
        self.subjects.get(&pid).copied().ok_or(TraceErrorKind::UnknownPid(pid))
    }

    fn object(&self, fid: Fid) -> Result<&Object, TraceErrorKind> {
        self.objects.get(&fid).ok_or(TraceErrorKind::UnknownFid(fid))
    }

    fn parent_level(&self, path: &str) -> Result<IntegrityLevel, TraceErrorKind> {
        if !is_canonical_path(path) || path == "/" {
            return Err(TraceErrorKind::BadPath(path.to_string()));
        }
        let parent = parent_path(path).ok_or_else(|| TraceErrorKind::BadPath(path.to_string()))?;
        let fid = self
            .paths
            .get(parent)
            .ok_or_else(|| TraceErrorKind::ParentMissing(path.to_string()))?;
        let dir = &self.objects[fid];
        if !dir.is_directory {
            return Err(TraceErrorKind::ParentNotDirectory(path.to_string()));
        }
        Ok(dir.level)
    }

    fn under_live_mount(&self, path: &str) -> bool {
        self.mounts.values().any(|prefix| path_under(path, prefix))
    }

    fn demote_subject(&mut self, pid: Pid, to: IntegrityLevel, changes: &mut Vec<LevelChange>) {
        let level = self.subjects.get_mut(&pid).expect("validated pid");
        if to < *level {
            changes.push(LevelChange {
                entity: EntityId::Process(pid),
                old: *level,
                new: to,
            });
            *level = to;
        }
    }

    fn dispatch(&mut self, kind: &EventKind) -> Result<LwmDecision, TraceErrorKind> {
        let mut changes = Vec::new();
        match kind {
            EventKind::Fork { parent, child } => {
                let level = self.subject(*parent)?;
                if self.subjects.contains_key(child) {
                    return Err(TraceErrorKind::PidInUse(*child));
                }
                self.subjects.insert(*child, level);
            }
            EventKind::Exec { pid, fid } => {
                self.subject(*pid)?;
                let object = self.object(*fid)?;
                if !object.executable {
                    return Err(TraceErrorKind::NotExecutable(*fid));
                }
                let level = object.level;
                self.demote_subject(*pid, level, &mut changes);
            }
            EventKind::RemoteComm { pid, peer } => {
                self.subject(*pid)?;
                if !self.loopback_prefixes.iter().any(|p| peer.starts_with(p.as_str())) {
                    self.demote_subject(*pid, IntegrityLevel::Low, &mut changes);
                }
            }
            EventKind::Login { pid, user } => {
                self.subject(*pid)?;
                let trusted = *self
                    .users
                    .get(user)
                    .ok_or_else(|| TraceErrorKind::UnknownUser(user.clone()))?;
                if !trusted {
                    self.demote_subject(*pid, IntegrityLevel::Low, &mut changes);
                }
            }
            EventKind::Mount { id, prefix } => {
                if self.mounts.contains_key(id) {
                    return Err(TraceErrorKind::MountInUse(*id));
                }
                if !is_canonical_path(prefix) {
                    return Err(TraceErrorKind::BadPath(prefix.clone()));
                }
                if let Some(live) = self
                    .mounts
                    .values()
                    .find(|live| path_under(prefix, live) || path_under(live, prefix))
                {
                    return Err(TraceErrorKind::MountOverlap(prefix.clone(), live.clone()));
                }
                let affected: Vec<Fid> = self
                    .paths
                    .range::<str, _>((Bound::Included(prefix.as_str()), Bound::Unbounded))
                    .take_while(|(path, _)| path.starts_with(prefix.as_str()))
                    .filter(|(path, _)| path_under(path, prefix))
                    .map(|(_, fid)| *fid)
                    .collect();
                for fid in affected {
                    let object = self.objects.get_mut(&fid).expect("indexed fid");
                    if object.level != IntegrityLevel::Low {
                        changes.push(LevelChange {
                            entity: EntityId::File(fid),
                            old: object.level,
                            new: IntegrityLevel::Low,
                        });
                        object.level = IntegrityLevel::Low;
                    }
                }
                self.mounts.insert(*id, prefix.clone());
            }
            EventKind::Unmount { id } => {
                self.mounts.remove(id).ok_or(TraceErrorKind::UnknownMount(*id))?;
            }
            EventKind::Read { pid, fid } => {
                self.subject(*pid)?;
                let level = self.object(*fid)?.level;
                self.demote_subject(*pid, level, &mut changes);
            }
            EventKind::Write { pid, fid } => {
                let subject = self.subject(*pid)?;
                if subject < self.object(*fid)?.level {
                    return Ok(LwmDecision::deny(Reason::IntegrityWrite));
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
                let subject = self.subject(*pid)?;
                if self.paths.contains_key(path) {
                    return Err(TraceErrorKind::PathExists(path.clone()));
                }
                if self.objects.contains_key(fid) {
                    return Err(TraceErrorKind::FidInUse(*fid));
                }
                if subject < self.parent_level(path)? {
                    return Ok(LwmDecision::deny(Reason::IntegrityWrite));
                }
                let level = if self.under_live_mount(path) {
                    IntegrityLevel::Low
                } else {
                    subject
                };
                self.insert(*fid, path, level, *is_directory, !*is_directory && perms.any_exec());
            }
            EventKind::Copy {
                pid,
                src,
                dst_path,
                dst_perms,
                dst_fid,
                ..
            } => {
                let subject = self.subject(*pid)?;
                let src_level = self.object(*src)?.level;
                // the copier reads the source before writing the destination
                let effective = subject.min(src_level);
                match self.paths.get(dst_path).copied() {
                    Some(existing) => {
                        let dst = &self.objects[&existing];
                        if dst.is_directory {
                            return Err(TraceErrorKind::CopyOntoDirectory(dst_path.clone()));
                        }
                        if effective < dst.level {
                            return Ok(LwmDecision::deny(Reason::IntegrityWrite));
                        }
                    }
                    None => {
                        if self.objects.contains_key(dst_fid) {
                            return Err(TraceErrorKind::FidInUse(*dst_fid));
                        }
                        if effective < self.parent_level(dst_path)? {
                            return Ok(LwmDecision::deny(Reason::IntegrityWrite));
                        }
                        let level = if self.under_live_mount(dst_path) {
                            IntegrityLevel::Low
                        } else {
                            effective
                        };
                        self.insert(*dst_fid, dst_path, level, false, dst_perms.any_exec());
                    }
                }
                self.demote_subject(*pid, src_level, &mut changes);
            }
            EventKind::Ipc { from, to, channel } => {
                if from == to {
                    return Err(TraceErrorKind::SelfIpc(*from));
                }
                let from_level = self.subject(*from)?;
                let to_level = self.subject(*to)?;
                self.demote_subject(*to, from_level, &mut changes);
                if channel.is_bidirectional() {
                    self.demote_subject(*from, to_level, &mut changes);
                }
            }
            EventKind::PrivOp { pid, .. } => {
                if self.subject(*pid)? < IntegrityLevel::High {
                    return Ok(LwmDecision::deny(Reason::PrivilegedOp));
                }
            }
        }
        Ok(LwmDecision::allow(changes))
    }

    fn insert(&mut self, fid: Fid, path: &str, level: IntegrityLevel, is_directory: bool, executable: bool) {
        self.paths.insert(path.to_string(), fid);
        self.objects.insert(
            fid,
            Object {
                path: path.to_string(),
                level,
                is_directory,
                executable,
            },
        );
    }

    /// Path of a live object, for reports.
    pub fn path_of(&self, fid: Fid) -> Option<&str> {
        self.objects.get(&fid).map(|o| o.path.as_str())
    }
}

/// Applies one event to a Low-Water-Mark state.
pub fn lwm_step(state: &mut LwmEngine, event: &Event) -> Result<LwmDecision, TraceError> {
    state.step(event)
}
