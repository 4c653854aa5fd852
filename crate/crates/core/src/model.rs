//! Domain types shared by the engine, the exception store, the replay
//! driver and the baseline. No policy logic lives here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FormatError;

pub type Pid = u64;
pub type Fid = u64;
pub type MountId = u64;

/// Binary intrusion label carried by processes and executable files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum TaintState {
    #[default]
    NonIntrusion,
    PotentialIntrusion,
}

impl TaintState {
    pub fn is_tainted(self) -> bool {
        self == TaintState::PotentialIntrusion
    }

    pub fn from_flag(tainted: bool) -> Self {
        if tainted {
            TaintState::PotentialIntrusion
        } else {
            TaintState::NonIntrusion
        }
    }
}

impl fmt::Display for TaintState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaintState::NonIntrusion => "NonIntrusion",
            TaintState::PotentialIntrusion => "PotentialIntrusion",
        })
    }
}

/// The nine classic rwx bits. Only the "other" bits and the exec bits feed
/// policy decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PermissionBits {
    pub owner_read: bool,
    pub owner_write: bool,
    pub owner_exec: bool,
    pub group_read: bool,
    pub group_write: bool,
    pub group_exec: bool,
    pub other_read: bool,
    pub other_write: bool,
    pub other_exec: bool,
}

impl PermissionBits {
    /// Builds from the numeric mode (only the low nine bits are used).
    pub fn from_mode(mode: u16) -> Self {
        let bit = |n: u16| mode & (1 << n) != 0;
        PermissionBits {
            owner_read: bit(8),
            owner_write: bit(7),
            owner_exec: bit(6),
            group_read: bit(5),
            group_write: bit(4),
            group_exec: bit(3),
            other_read: bit(2),
            other_write: bit(1),
            other_exec: bit(0),
        }
    }

    pub fn mode(&self) -> u16 {
        [
            self.owner_read,
            self.owner_write,
            self.owner_exec,
            self.group_read,
            self.group_write,
            self.group_exec,
            self.other_read,
            self.other_write,
            self.other_exec,
        ]
        .iter()
        .fold(0u16, |acc, &b| (acc << 1) | u16::from(b))
    }

    pub fn any_exec(&self) -> bool {
        self.owner_exec || self.group_exec || self.other_exec
    }

    /// Three-digit octal rendering, e.g. `"755"`.
    pub fn render(&self) -> String {
        format!("{:03o}", self.mode())
    }
}

/// Parses a three-digit octal permission string.
pub fn parse_perms(octal: &str) -> Result<PermissionBits, FormatError> {
    let mut mode = 0u16;
    let mut count = 0usize;
    for (position, ch) in octal.chars().enumerate() {
        if position >= 3 {
            return Err(FormatError::PermsLength(octal.chars().count()));
        }
        let digit = ch
            .to_digit(8)
            .ok_or(FormatError::PermsDigit { ch, position })?;
        mode = (mode << 3) | digit as u16;
        count += 1;
    }
    if count != 3 {
        return Err(FormatError::PermsLength(count));
    }
    Ok(PermissionBits::from_mode(mode))
}

impl FromStr for PermissionBits {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_perms(s)
    }
}

impl fmt::Display for PermissionBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A privileged operation, named like a Linux capability (`CAP_SYS_MODULE`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Capability(String);

impl Capability {
    pub fn new(name: &str) -> Result<Self, FormatError> {
        let valid = name
            .strip_prefix("CAP_")
            .is_some_and(|rest| {
                !rest.is_empty()
                    && rest
                        .bytes()
                        .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
            });
        if valid {
            Ok(Capability(name.to_string()))
        } else {
            Err(FormatError::Capability(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Capability {
    type Error = FormatError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Capability::new(&value)
    }
}

impl From<Capability> for String {
    fn from(value: Capability) -> Self {
        value.0
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Application identity: the inode of the executable a process was started from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Key(pub Fid);

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessRecord {
    pub pid: Pid,
    pub key: Key,
    pub taint: TaintState,
    pub user: String,
    pub parent: Option<Pid>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileRecord {
    pub fid: Fid,
    pub path: String,
    pub perms: PermissionBits,
    pub owner: String,
    pub taint: TaintState,
    pub is_directory: bool,
    pub on_mobile_mount: bool,
}

impl FileRecord {
    /// Any exec bit set on a non-directory.
    pub fn executable(&self) -> bool {
        !self.is_directory && self.perms.any_exec()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub name: String,
    pub trusted: bool,
}

/// Either side of a taint update or a graph node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityId {
    Process(Pid),
    File(Fid),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Process(pid) => write!(f, "p{pid}"),
            EntityId::File(fid) => write!(f, "f{fid}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IpcChannel {
    Pipe,
    Signal,
    SocketLocal,
    SharedMemory,
}

impl IpcChannel {
    /// Shared memory carries data both ways; the rest follow the sender.
    pub fn is_bidirectional(self) -> bool {
        self == IpcChannel::SharedMemory
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IpcChannel::Pipe => "pipe",
            IpcChannel::Signal => "signal",
            IpcChannel::SocketLocal => "socket_local",
            IpcChannel::SharedMemory => "shm",
        }
    }
}

impl FromStr for IpcChannel {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pipe" => Ok(IpcChannel::Pipe),
            "signal" => Ok(IpcChannel::Signal),
            "socket_local" => Ok(IpcChannel::SocketLocal),
            "shm" | "shared_memory" => Ok(IpcChannel::SharedMemory),
            other => Err(FormatError::Channel(other.to_string())),
        }
    }
}

/// One OS event, numbered by its position in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Fork { parent: Pid, child: Pid },
    Exec { pid: Pid, fid: Fid },
    RemoteComm { pid: Pid, peer: String },
    Login { pid: Pid, user: String },
    Mount { id: MountId, prefix: String },
    Unmount { id: MountId },
    /// `dst_fid` names the node created when `dst_path` does not exist yet.
    Copy {
        pid: Pid,
        src: Fid,
        dst_path: String,
        dst_perms: PermissionBits,
        dst_owner: String,
        dst_fid: Fid,
    },
    Create {
        pid: Pid,
        path: String,
        perms: PermissionBits,
        owner: String,
        is_directory: bool,
        fid: Fid,
    },
    Write { pid: Pid, fid: Fid },
    Read { pid: Pid, fid: Fid },
    Ipc { from: Pid, to: Pid, channel: IpcChannel },
    PrivOp { pid: Pid, capability: Capability },
}

impl EventKind {
    pub fn verb(&self) -> &'static str {
        match self {
            EventKind::Fork { .. } => "FORK",
            EventKind::Exec { .. } => "EXEC",
            EventKind::RemoteComm { .. } => "NET",
            EventKind::Login { .. } => "LOGIN",
            EventKind::Mount { .. } => "MOUNT",
            EventKind::Unmount { .. } => "UNMOUNT",
            EventKind::Copy { .. } => "COPY",
            EventKind::Create { .. } => "CREATE",
            EventKind::Write { .. } => "WRITE",
            EventKind::Read { .. } => "READ",
            EventKind::Ipc { .. } => "IPC",
            EventKind::PrivOp { .. } => "PRIV",
        }
    }

    /// The process on whose behalf the event runs, when there is one.
    pub fn subject(&self) -> Option<Pid> {
        match *self {
            EventKind::Fork { parent, .. } => Some(parent),
            EventKind::Exec { pid, .. }
            | EventKind::RemoteComm { pid, .. }
            | EventKind::Login { pid, .. }
            | EventKind::Copy { pid, .. }
            | EventKind::Create { pid, .. }
            | EventKind::Write { pid, .. }
            | EventKind::Read { pid, .. }
            | EventKind::PrivOp { pid, .. } => Some(pid),
            EventKind::Ipc { from, .. } => Some(from),
            EventKind::Mount { .. } | EventKind::Unmount { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Allow,
    Deny,
    AllowByException,
}

/// The class of security-critical operation that triggered a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    PrivilegedOp,
    IntegrityWrite,
    SensitivityRead,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::PrivilegedOp => "PrivilegedOp",
            Reason::IntegrityWrite => "IntegrityWrite",
            Reason::SensitivityRead => "SensitivityRead",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExceptionKind {
    FileList,
    PrivilegeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaintUpdate {
    pub entity: EntityId,
    pub old: TaintState,
    pub new: TaintState,
}

/// Outcome of one event.
///
/// `reason` is set whenever the event was a security-critical operation by a
/// tainted process: on `Deny`, on `AllowByException`, and on the `Allow`
/// issued while learning (the learned exception).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub reason: Option<Reason>,
    pub exception: Option<ExceptionKind>,
    pub taint_updates: Vec<TaintUpdate>,
}

impl Decision {
    pub fn allow() -> Self {
        Decision {
            verdict: Verdict::Allow,
            reason: None,
            exception: None,
            taint_updates: Vec::new(),
        }
    }

    pub fn deny(reason: Reason) -> Self {
        Decision {
            verdict: Verdict::Deny,
            reason: Some(reason),
            exception: None,
            taint_updates: Vec::new(),
        }
    }

    pub fn by_exception(reason: Reason, kind: ExceptionKind) -> Self {
        Decision {
            verdict: Verdict::AllowByException,
            reason: Some(reason),
            exception: Some(kind),
            taint_updates: Vec::new(),
        }
    }

    pub fn learned(reason: Reason) -> Self {
        Decision {
            verdict: Verdict::Allow,
            reason: Some(reason),
            exception: None,
            taint_updates: Vec::new(),
        }
    }

    pub fn is_deny(&self) -> bool {
        self.verdict == Verdict::Deny
    }

    /// Allowed only because the engine was recording exceptions.
    pub fn is_learned(&self) -> bool {
        self.verdict == Verdict::Allow && self.reason.is_some()
    }
}

/// Whether `path` equals `prefix` or lies beneath it.
pub fn path_under(path: &str, prefix: &str) -> bool {
    if prefix == "/" {
        return path.starts_with('/');
    }
    match path.strip_prefix(prefix) {
        Some(rest) => rest.is_empty() || rest.starts_with('/'),
        None => false,
    }
}

/// Parent directory of a canonical absolute path; `None` for `/`.
pub fn parent_path(path: &str) -> Option<&str> {
    if path == "/" {
        return None;
    }
    let idx = path.rfind('/')?;
    Some(if idx == 0 { "/" } else { &path[..idx] })
}

/// Absolute, no empty / `.` / `..` components, no trailing slash.
pub fn is_canonical_path(path: &str) -> bool {
    if path == "/" {
        return true;
    }
    let Some(rest) = path.strip_prefix('/') else {
        return false;
    };
    rest.split('/')
        .all(|c| !c.is_empty() && c != "." && c != "..")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_755() {
        let p = parse_perms("755").unwrap();
        assert!(p.owner_read && p.owner_write && p.owner_exec);
        assert!(p.group_read && !p.group_write && p.group_exec);
        assert!(p.other_read && !p.other_write && p.other_exec);
    }

    #[test]
    fn parse_000_and_644() {
        assert_eq!(parse_perms("000").unwrap(), PermissionBits::default());
        let p = parse_perms("644").unwrap();
        assert!(p.other_read);
        assert!(!p.other_write);
        assert!(!p.any_exec());
    }

    #[test]
    fn parse_rejects_bad_digit_with_position() {
        let err = parse_perms("7a5").unwrap_err();
        assert_eq!(err, FormatError::PermsDigit { ch: 'a', position: 1 });
        assert!(err.to_string().contains("'a'"));
        assert!(matches!(parse_perms("789"), Err(FormatError::PermsDigit { ch: '8', .. })));
        assert!(matches!(parse_perms("75"), Err(FormatError::PermsLength(2))));
        assert!(matches!(parse_perms("7555"), Err(FormatError::PermsLength(4))));
        assert!(matches!(parse_perms(""), Err(FormatError::PermsLength(0))));
    }

    #[test]
    fn all_512_modes_round_trip() {
        for mode in 0u16..512 {
            let text = format!("{mode:03o}");
            assert_eq!(parse_perms(&text).unwrap().render(), text);
        }
    }

    #[test]
    fn executable_excludes_directories() {
        let mut f = FileRecord {
            fid: 1,
            path: "/bin".into(),
            perms: parse_perms("755").unwrap(),
            owner: "root".into(),
            taint: TaintState::NonIntrusion,
            is_directory: true,
            on_mobile_mount: false,
        };
        assert!(!f.executable());
        f.is_directory = false;
        assert!(f.executable());
        f.perms = parse_perms("001").unwrap();
        assert!(f.executable());
        f.perms = parse_perms("666").unwrap();
        assert!(!f.executable());
    }

    #[test]
    fn capability_pattern() {
        assert!(Capability::new("CAP_SYS_MODULE").is_ok());
        assert!(Capability::new("CAP_2").is_ok());
        for bad in ["", "CAP_", "cap_sys_module", "SYS_MODULE", "CAP_SYS-MODULE", "CAP_ X"] {
            assert!(Capability::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn path_helpers() {
        assert!(path_under("/mnt/usb/adore", "/mnt/usb"));
        assert!(path_under("/mnt/usb", "/mnt/usb"));
        assert!(!path_under("/mnt/usb2/x", "/mnt/usb"));
        assert!(path_under("/etc", "/"));
        assert_eq!(parent_path("/etc/passwd"), Some("/etc"));
        assert_eq!(parent_path("/etc"), Some("/"));
        assert_eq!(parent_path("/"), None);
        assert!(is_canonical_path("/a/b"));
        for bad in ["a/b", "/a//b", "/a/", "/a/./b", "/a/../b", ""] {
            assert!(!is_canonical_path(bad), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn mode_round_trip(mode in 0u16..512) {
            prop_assert_eq!(PermissionBits::from_mode(mode).mode(), mode);
        }
    }
}
