//! A taint-tracking mandatory access control model driven by OS events.
//!
//! Processes and executable files carry a binary taint label that starts at
//! intrusion entrances (remote communication, untrusted logins, mobile
//! storage) and spreads along spawn, exec, IPC and write flows. Tainted
//! processes are stopped only at security-critical operations: privileged
//! capabilities, writes to integrity-protected files and reads of
//! sensitivity-protected files. Benign exceptions to that rule are learned
//! in a secure environment and honoured when enforcing.

pub mod baseline;
pub mod engine;
pub mod error;
pub mod exceptions;
pub mod model;
pub mod scenarios;
pub mod trace;

pub use engine::{is_integrity_protected, is_sensitivity_protected, Engine, EngineConfig};
pub use error::{ConfigError, FormatError, ParseError, StoreError, TraceError, TraceErrorKind};
pub use exceptions::{AccessMode, AccessModeVector, EnvironmentBit, ExceptionStore, ExceptionTriple};
pub use model::{
    parse_perms, Capability, Decision, EntityId, Event, EventKind, ExceptionKind, Fid, FileRecord,
    IpcChannel, Key, PermissionBits, Pid, ProcessRecord, Reason, TaintState, TaintUpdate,
    UserRecord, Verdict,
};
pub use trace::{parse_trace, replay, taint_oracle, Trace, TraceLabel};
