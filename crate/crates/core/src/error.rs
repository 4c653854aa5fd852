use thiserror::Error;

use crate::model::{Fid, MountId, Pid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid permission digit '{ch}' at position {position}")]
    PermsDigit { ch: char, position: usize },
    #[error("permissions must be exactly 3 octal digits, got {0}")]
    PermsLength(usize),
    #[error("invalid capability name {0:?} (expected CAP_[A-Z0-9_]+)")]
    Capability(String),
    #[error("unknown ipc channel {0:?}")]
    Channel(String),
}

/// Rejected engine configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("duplicate fid {0}")]
    DuplicateFid(Fid),
    #[error("duplicate pid {0}")]
    DuplicatePid(Pid),
    #[error("duplicate path {0}")]
    DuplicatePath(String),
    #[error("duplicate user {0}")]
    DuplicateUser(String),
    #[error("path {0:?} is not a canonical absolute path")]
    BadPath(String),
    #[error("seed entity {0} starts tainted")]
    TaintedSeed(String),
}

/// An event that cannot be applied to the current state. This is a fault in
/// the trace, never a policy decision.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {seq}: {kind}")]
pub struct TraceError {
    pub seq: u64,
    pub kind: TraceErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceErrorKind {
    #[error("unknown pid {0}")]
    UnknownPid(Pid),
    #[error("unknown fid {0}")]
    UnknownFid(Fid),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown mount {0}")]
    UnknownMount(MountId),
    #[error("pid {0} already live")]
    PidInUse(Pid),
    #[error("fid {0} already in use")]
    FidInUse(Fid),
    #[error("path {0} already exists")]
    PathExists(String),
    #[error("parent directory of {0} does not exist")]
    ParentMissing(String),
    #[error("parent of {0} is not a directory")]
    ParentNotDirectory(String),
    #[error("path {0:?} is not a canonical absolute path")]
    BadPath(String),
    #[error("fid {0} is not executable")]
    NotExecutable(Fid),
    #[error("copy destination {0} is a directory")]
    CopyOntoDirectory(String),
    #[error("ipc from pid {0} to itself")]
    SelfIpc(Pid),
    #[error("mount id {0} already live")]
    MountInUse(MountId),
    #[error("mount prefix {0} overlaps live mount {1}")]
    MountOverlap(String, String),
    #[error("sequence number {got} does not follow {prev}")]
    Sequence { prev: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("exceptions can only be recorded in the secure environment")]
    RecordWhileEnforcing,
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported exception store version {0:?}")]
    Version(String),
}

/// Positioned trace-file error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}
