use std::collections::{BTreeMap, HashMap, HashSet};

use super::{Snapshot, Trace, TraceLabel, TRACE_HEADER};
use crate::error::ParseError;
use crate::model::{
    is_canonical_path, parse_perms, Capability, Event, EventKind, Fid, FileRecord, IpcChannel,
    Key, MountId, PermissionBits, Pid, ProcessRecord, TaintState, UserRecord,
};

/// Parses raw bytes, reporting invalid UTF-8 with its line number.
pub fn parse_trace_bytes(bytes: &[u8]) -> Result<Trace, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_trace(text),
        Err(e) => {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            Err(ParseError::new(line, "invalid UTF-8"))
        }
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut parser = Parser::default();
    for (idx, raw) in text.lines().enumerate() {
        parser.line = idx + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        parser.line_content(content)?;
    }
    if !parser.seen_header {
        return Err(ParseError::new(parser.line.max(1), "missing header `cumac-trace v1`"));
    }
    Ok(Trace {
        snapshot: parser.snapshot,
        events: parser.events,
    })
}

/// `k=v` fields of one line, with the set of keys consumed so far.
struct Fields<'a> {
    line: usize,
    verb: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(line: usize, verb: &'a str, tokens: impl Iterator<Item = &'a str>) -> Result<Self, ParseError> {
        let mut map = BTreeMap::new();
        for token in tokens {
            let (k, v) = token.split_once('=').ok_or_else(|| {
                ParseError::new(line, format!("{verb}: expected key=value, got {token:?}"))
            })?;
            if k.is_empty() || v.is_empty() {
                return Err(ParseError::new(line, format!("{verb}: empty key or value in {token:?}")));
            }
            if map.insert(k, v).is_some() {
                return Err(ParseError::new(line, format!("{verb}: duplicate field {k}")));
            }
        }
        Ok(Fields { line, verb, map })
    }

    /// Checks the exact field set: every required key, plus optional ones.
    fn expect(&self, required: &[&str], optional: &[&str]) -> Result<(), ParseError> {
        for key in required {
            if !self.map.contains_key(key) {
                return Err(self.err(format!("{}: missing field {key}", self.verb)));
            }
        }
        for key in self.map.keys() {
            if !required.contains(key) && !optional.contains(key) {
                return Err(self.err(format!("{}: unexpected field {key}", self.verb)));
            }
        }
        Ok(())
    }

    fn err(&self, message: String) -> ParseError {
        ParseError::new(self.line, message)
    }

    fn str(&self, key: &str) -> &'a str {
        self.map.get(key).copied().unwrap_or_default()
    }

    fn num(&self, key: &str) -> Result<u64, ParseError> {
        let text = self.str(key);
        text.parse()
            .map_err(|_| self.err(format!("{}: {key} must be an unsigned integer, got {text:?}", self.verb)))
    }

    fn opt_num(&self, key: &str) -> Result<Option<u64>, ParseError> {
        if self.map.contains_key(key) {
            self.num(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn flag(&self, key: &str) -> Result<bool, ParseError> {
        match self.str(key) {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.err(format!("{}: {key} must be 0 or 1, got {other:?}", self.verb))),
        }
    }

    fn perms(&self, key: &str) -> Result<PermissionBits, ParseError> {
        parse_perms(self.str(key)).map_err(|e| self.err(format!("{}: {e}", self.verb)))
    }

    fn path(&self, key: &str) -> Result<String, ParseError> {
        let path = self.str(key);
        if is_canonical_path(path) {
            Ok(path.to_string())
        } else {
            Err(self.err(format!("{}: {path:?} is not a canonical absolute path", self.verb)))
        }
    }
}

#[derive(Default)]
struct Parser {
    line: usize,
    seen_header: bool,
    in_events: bool,
    snapshot: Snapshot,
    events: Vec<Event>,
    users: HashSet<String>,
    pids: HashSet<Pid>,
    fids: HashSet<Fid>,
    paths: HashMap<String, Fid>,
    max_fid: Option<Fid>,
    live_mounts: HashSet<MountId>,
}

impl Parser {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, message)
    }

    fn line_content(&mut self, content: &str) -> Result<(), ParseError> {
        let mut tokens = content.split_whitespace();
        let verb = tokens.next().unwrap_or_default();
        if !self.seen_header {
            let version = tokens.next();
            if verb == "cumac-trace" && version == Some("v1") && tokens.next().is_none() {
                self.seen_header = true;
                return Ok(());
            }
            if verb == "cumac-trace" {
                return Err(self.err(format!("unsupported trace version {:?}", version.unwrap_or(""))));
            }
            return Err(self.err(format!("expected header `{TRACE_HEADER}`, got {verb:?}")));
        }
        match verb {
            "LABEL" => {
                self.snapshot_line(verb)?;
                let value = tokens.next().unwrap_or_default();
                if tokens.next().is_some() {
                    return Err(self.err("LABEL takes a single value"));
                }
                if self.snapshot.label.is_some() {
                    return Err(self.err("duplicate LABEL"));
                }
                self.snapshot.label = Some(match value {
                    "benign" => TraceLabel::Benign,
                    "attack" => TraceLabel::Attack,
                    other => return Err(self.err(format!("LABEL must be benign or attack, got {other:?}"))),
                });
                Ok(())
            }
            "USER" => {
                self.snapshot_line(verb)?;
                let name = tokens.next().unwrap_or_default();
                if name.is_empty() || name.contains('=') {
                    return Err(self.err("USER: expected a user name"));
                }
                let fields = Fields::new(self.line, verb, tokens)?;
                fields.expect(&["trusted"], &[])?;
                let trusted = fields.flag("trusted")?;
                if !self.users.insert(name.to_string()) {
                    return Err(self.err(format!("duplicate user {name}")));
                }
                self.snapshot.users.push(UserRecord {
                    name: name.to_string(),
                    trusted,
                });
                Ok(())
            }
            "FILE" => {
                self.snapshot_line(verb)?;
                let fields = Fields::new(self.line, verb, tokens)?;
                fields.expect(&["fid", "path", "perms", "owner", "dir"], &[])?;
                let fid = fields.num("fid")?;
                let path = fields.path("path")?;
                let perms = fields.perms("perms")?;
                let is_directory = fields.flag("dir")?;
                self.declare_file(fid, &path)?;
                self.snapshot.files.push(FileRecord {
                    fid,
                    path,
                    perms,
                    owner: fields.str("owner").to_string(),
                    taint: TaintState::NonIntrusion,
                    is_directory,
                    on_mobile_mount: false,
                });
                Ok(())
            }
            "PROC" => {
                self.snapshot_line(verb)?;
                let fields = Fields::new(self.line, verb, tokens)?;
                fields.expect(&["pid", "key", "user"], &[])?;
                let pid = fields.num("pid")?;
                let key = fields.num("key")?;
                self.known_fid(key)?;
                let user = fields.str("user");
                self.known_user(user)?;
                if !self.pids.insert(pid) {
                    return Err(self.err(format!("duplicate pid {pid}")));
                }
                self.snapshot.processes.push(ProcessRecord {
                    pid,
                    key: Key(key),
                    taint: TaintState::NonIntrusion,
                    user: user.to_string(),
                    parent: None,
                });
                Ok(())
            }
            _ => {
                self.in_events = true;
                let fields = Fields::new(self.line, verb, tokens)?;
                let kind = self.event(verb, &fields)?;
                let seq = self.events.len() as u64 + 1;
                self.events.push(Event { seq, kind });
                Ok(())
            }
        }
    }

    fn snapshot_line(&self, verb: &str) -> Result<(), ParseError> {
        if self.in_events {
            Err(self.err(format!("{verb} snapshot line after the first event")))
        } else {
            Ok(())
        }
    }

    fn declare_file(&mut self, fid: Fid, path: &str) -> Result<(), ParseError> {
        if self.fids.contains(&fid) {
            return Err(self.err(format!("duplicate fid {fid}")));
        }
        if self.paths.contains_key(path) {
            return Err(self.err(format!("path {path} already exists")));
        }
        self.fids.insert(fid);
        self.paths.insert(path.to_string(), fid);
        self.max_fid = Some(self.max_fid.map_or(fid, |m| m.max(fid)));
        Ok(())
    }

    fn fresh_fid(&self, explicit: Option<Fid>) -> Result<Fid, ParseError> {
        match explicit {
            Some(fid) => Ok(fid),
            None => match self.max_fid {
                None => Ok(1),
                Some(max) => max
                    .checked_add(1)
                    .ok_or_else(|| self.err("no fid left to allocate")),
            },
        }
    }

    fn known_pid(&self, pid: Pid) -> Result<Pid, ParseError> {
        if self.pids.contains(&pid) {
            Ok(pid)
        } else {
            Err(self.err(format!("unknown pid {pid}")))
        }
    }

    fn known_fid(&self, fid: Fid) -> Result<Fid, ParseError> {
        if self.fids.contains(&fid) {
            Ok(fid)
        } else {
            Err(self.err(format!("unknown fid {fid}")))
        }
    }

    fn known_user(&self, user: &str) -> Result<(), ParseError> {
        if self.users.contains(user) {
            Ok(())
        } else {
            Err(self.err(format!("unknown user {user}")))
        }
    }

    fn event(&mut self, verb: &str, f: &Fields<'_>) -> Result<EventKind, ParseError> {
        let kind = match verb {
            "FORK" => {
                f.expect(&["parent", "child"], &[])?;
                let parent = self.known_pid(f.num("parent")?)?;
                let child = f.num("child")?;
                if !self.pids.insert(child) {
                    return Err(self.err(format!("pid {child} already exists")));
                }
                EventKind::Fork { parent, child }
            }
            "EXEC" => {
                f.expect(&["pid", "fid"], &[])?;
                EventKind::Exec {
                    pid: self.known_pid(f.num("pid")?)?,
                    fid: self.known_fid(f.num("fid")?)?,
                }
            }
            "NET" => {
                f.expect(&["pid", "peer"], &[])?;
                EventKind::RemoteComm {
                    pid: self.known_pid(f.num("pid")?)?,
                    peer: f.str("peer").to_string(),
                }
            }
            "LOGIN" => {
                f.expect(&["pid", "user"], &[])?;
                let pid = self.known_pid(f.num("pid")?)?;
                let user = f.str("user");
                self.known_user(user)?;
                EventKind::Login {
                    pid,
                    user: user.to_string(),
                }
            }
            "MOUNT" => {
                f.expect(&["id", "prefix"], &[])?;
                let id = f.num("id")?;
                let prefix = f.path("prefix")?;
                if !self.live_mounts.insert(id) {
                    return Err(self.err(format!("mount {id} already live")));
                }
                EventKind::Mount { id, prefix }
            }
            "UNMOUNT" => {
                f.expect(&["id"], &[])?;
                let id = f.num("id")?;
                if !self.live_mounts.remove(&id) {
                    return Err(self.err(format!("unknown mount {id}")));
                }
                EventKind::Unmount { id }
            }
            "COPY" => {
                f.expect(&["pid", "src", "dst", "perms", "owner"], &["fid"])?;
                let pid = self.known_pid(f.num("pid")?)?;
                let src = self.known_fid(f.num("src")?)?;
                let dst_path = f.path("dst")?;
                let dst_perms = f.perms("perms")?;
                let explicit = f.opt_num("fid")?;
                let dst_fid = match self.paths.get(&dst_path) {
                    Some(&existing) => match explicit {
                        Some(fid) if fid != existing => {
                            return Err(self.err(format!(
                                "COPY: fid {fid} does not match existing {dst_path} (fid {existing})"
                            )))
                        }
                        _ => existing,
                    },
                    None => {
                        let fid = self.fresh_fid(explicit)?;
                        self.declare_file(fid, &dst_path)?;
                        fid
                    }
                };
                EventKind::Copy {
                    pid,
                    src,
                    dst_path,
                    dst_perms,
                    dst_owner: f.str("owner").to_string(),
                    dst_fid,
                }
            }
            "CREATE" => {
                f.expect(&["pid", "path", "perms", "owner", "dir"], &["fid"])?;
                let pid = self.known_pid(f.num("pid")?)?;
                let path = f.path("path")?;
                let perms = f.perms("perms")?;
                let is_directory = f.flag("dir")?;
                let fid = self.fresh_fid(f.opt_num("fid")?)?;
                self.declare_file(fid, &path)?;
                EventKind::Create {
                    pid,
                    path,
                    perms,
                    owner: f.str("owner").to_string(),
                    is_directory,
                    fid,
                }
            }
            "WRITE" | "READ" => {
                f.expect(&["pid", "fid"], &[])?;
                let pid = self.known_pid(f.num("pid")?)?;
                let fid = self.known_fid(f.num("fid")?)?;
                if verb == "WRITE" {
                    EventKind::Write { pid, fid }
                } else {
                    EventKind::Read { pid, fid }
                }
            }
            "IPC" => {
                f.expect(&["from", "to", "chan"], &[])?;
                let from = self.known_pid(f.num("from")?)?;
                let to = self.known_pid(f.num("to")?)?;
                if from == to {
                    return Err(self.err(format!("IPC from pid {from} to itself")));
                }
                let channel: IpcChannel = f
                    .str("chan")
                    .parse()
                    .map_err(|e| self.err(format!("IPC: {e}")))?;
                EventKind::Ipc { from, to, channel }
            }
            "PRIV" => {
                f.expect(&["pid", "cap"], &[])?;
                let pid = self.known_pid(f.num("pid")?)?;
                let capability =
                    Capability::new(f.str("cap")).map_err(|e| self.err(format!("PRIV: {e}")))?;
                EventKind::PrivOp { pid, capability }
            }
            other => return Err(self.err(format!("unknown verb {other:?}"))),
        };
        Ok(kind)
    }
}
