//! Exceptional-access lists and the environment bit.
//!
//! In the secure environment every access the base model would refuse is
//! permitted and recorded here, keyed by the requesting application. In the
//! unsecure environment a refused access is permitted only if a matching
//! record exists. File records are keyed by target node, privilege records
//! by application key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::StoreError;
use crate::model::{Capability, Fid, Key};

pub const STORE_HEADER: &str = "cumac-exceptions v1";
const STORE_MAGIC: &str = "cumac-exceptions";

/// System-wide switch between learning (`Secure`) and enforcing (`Unsecure`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum EnvironmentBit {
    Secure,
    #[default]
    Unsecure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessMode {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AccessModeVector {
    pub read: bool,
    pub write: bool,
}

impl AccessModeVector {
    pub fn of(mode: AccessMode) -> Self {
        let mut v = AccessModeVector::default();
        v.set(mode);
        v
    }

    pub fn set(&mut self, mode: AccessMode) {
        match mode {
            AccessMode::Read => self.read = true,
            AccessMode::Write => self.write = true,
        }
    }

    pub fn allows(&self, mode: AccessMode) -> bool {
        match mode {
            AccessMode::Read => self.read,
            AccessMode::Write => self.write,
        }
    }

    fn render(&self) -> &'static str {
        match (self.read, self.write) {
            (true, true) => "rw",
            (true, false) => "r",
            (false, true) => "w",
            (false, false) => "",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "r" => Some(AccessModeVector { read: true, write: false }),
            "w" => Some(AccessModeVector { read: false, write: true }),
            "rw" => Some(AccessModeVector { read: true, write: true }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileExceptionEntry {
    pub key: Key,
    pub modes: AccessModeVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivExceptionEntry {
    pub key: Key,
    pub capabilities: BTreeSet<Capability>,
}

/// A single stored permission, used to enumerate store contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExceptionTriple {
    File { key: Key, fid: Fid, mode: AccessMode },
    Priv { key: Key, capability: Capability },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExceptionStore {
    file_lists: BTreeMap<Fid, BTreeMap<Key, AccessModeVector>>,
    priv_lists: BTreeMap<Key, BTreeSet<Capability>>,
    bit: EnvironmentBit,
}

impl ExceptionStore {
    pub fn new(bit: EnvironmentBit) -> Self {
        ExceptionStore {
            bit,
            ..Default::default()
        }
    }

    pub fn bit(&self) -> EnvironmentBit {
        self.bit
    }

    pub fn set_bit(&mut self, bit: EnvironmentBit) {
        self.bit = bit;
    }

    pub fn is_empty(&self) -> bool {
        self.file_lists.is_empty() && self.priv_lists.is_empty()
    }

    pub fn record_file_exception(
        &mut self,
        key: Key,
        fid: Fid,
        mode: AccessMode,
    ) -> Result<(), StoreError> {
        if self.bit != EnvironmentBit::Secure {
            return Err(StoreError::RecordWhileEnforcing);
        }
        self.file_lists
            .entry(fid)
            .or_default()
            .entry(key)
            .or_default()
            .set(mode);
        Ok(())
    }

    pub fn check_file_exception(&self, key: Key, fid: Fid, mode: AccessMode) -> bool {
        self.file_lists
            .get(&fid)
            .and_then(|entries| entries.get(&key))
            .is_some_and(|modes| modes.allows(mode))
    }

    pub fn record_priv_exception(
        &mut self,
        key: Key,
        capability: &Capability,
    ) -> Result<(), StoreError> {
        if self.bit != EnvironmentBit::Secure {
            return Err(StoreError::RecordWhileEnforcing);
        }
        self.priv_lists
            .entry(key)
            .or_default()
            .insert(capability.clone());
        Ok(())
    }

    pub fn check_priv_exception(&self, key: Key, capability: &Capability) -> bool {
        self.priv_lists
            .get(&key)
            .is_some_and(|caps| caps.contains(capability))
    }

    /// The exception list attached to one file or directory.
    pub fn file_entries(&self, fid: Fid) -> Vec<FileExceptionEntry> {
        self.file_lists
            .get(&fid)
            .map(|entries| {
                entries
                    .iter()
                    .map(|(&key, &modes)| FileExceptionEntry { key, modes })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn priv_entry(&self, key: Key) -> Option<PrivExceptionEntry> {
        self.priv_lists.get(&key).map(|caps| PrivExceptionEntry {
            key,
            capabilities: caps.clone(),
        })
    }

    /// Every stored (key, target, mode) permission, in canonical order.
    pub fn triples(&self) -> BTreeSet<ExceptionTriple> {
        let mut out = BTreeSet::new();
        for (&fid, entries) in &self.file_lists {
            for (&key, modes) in entries {
                for mode in [AccessMode::Read, AccessMode::Write] {
                    if modes.allows(mode) {
                        out.insert(ExceptionTriple::File {
                            key,
                            fid,
                            mode,
                        });
                    }
                }
            }
        }
        for (&key, caps) in &self.priv_lists {
            for cap in caps {
                out.insert(ExceptionTriple::Priv {
                    key,
                    capability: cap.clone(),
                });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.file_lists.values().map(BTreeMap::len).sum::<usize>()
            + self.priv_lists.values().map(BTreeSet::len).sum::<usize>()
    }

    /// Same permissions, ignoring the environment bit.
    pub fn same_contents(&self, other: &ExceptionStore) -> bool {
        self.file_lists == other.file_lists && self.priv_lists == other.priv_lists
    }

    /// Canonical text form. The environment bit is not persisted.
    pub fn save(&self) -> Vec<u8> {
        self.save_annotated(|_| None).into_bytes()
    }

    /// Like [`save`](Self::save) with a trailing `#` comment naming the
    /// paths of the target and key nodes where `path_of` knows them.
    pub fn save_annotated<'a>(&self, path_of: impl Fn(Fid) -> Option<&'a str>) -> String {
        let mut out = String::new();
        out.push_str(STORE_HEADER);
        out.push('\n');
        for (&fid, entries) in &self.file_lists {
            for (&key, modes) in entries {
                let _ = write!(out, "F {fid} {key} {}", modes.render());
                match (path_of(fid), path_of(key.0)) {
                    (None, None) => {}
                    (target, app) => {
                        let _ = write!(
                            out,
                            " # {} <- {}",
                            target.unwrap_or("?"),
                            app.unwrap_or("?")
                        );
                    }
                }
                out.push('\n');
            }
        }
        for (&key, caps) in &self.priv_lists {
            for cap in caps {
                let _ = write!(out, "P {key} {cap}");
                if let Some(app) = path_of(key.0) {
                    let _ = write!(out, " # {app}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses the text form. The returned store is in the unsecure
    /// environment; callers pick the bit for their run.
    pub fn load(bytes: &[u8]) -> Result<ExceptionStore, StoreError> {
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let prefix = &bytes[..e.valid_up_to()];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            let column = prefix.len() - prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
            StoreError::Parse {
                line,
                column,
                message: "invalid UTF-8".into(),
            }
        })?;
        let mut store = ExceptionStore::new(EnvironmentBit::Unsecure);
        let mut seen_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let fields = tokenize(content);
            if !seen_header {
                if fields.first().map(|t| t.1) != Some(STORE_MAGIC) || fields.len() != 2 {
                    return Err(parse_err(line_no, fields.first().map_or(1, |t| t.0), "expected header `cumac-exceptions v1`"));
                }
                if fields[1].1 != "v1" {
                    return Err(StoreError::Version(fields[1].1.to_string()));
                }
                seen_header = true;
                continue;
            }
            let (col, tag) = fields[0];
            match tag {
                "F" => {
                    if fields.len() != 4 {
                        return Err(parse_err(line_no, col, "file entry needs `F <fid> <key> <modes>`"));
                    }
                    let fid = parse_num(line_no, fields[1])?;
                    let key = Key(parse_num(line_no, fields[2])?);
                    let modes = AccessModeVector::parse(fields[3].1).ok_or_else(|| {
                        parse_err(line_no, fields[3].0, "modes must be r, w or rw")
                    })?;
                    let slot = store.file_lists.entry(fid).or_default().entry(key).or_default();
                    slot.read |= modes.read;
                    slot.write |= modes.write;
                }
                "P" => {
                    if fields.len() != 3 {
                        return Err(parse_err(line_no, col, "privilege entry needs `P <key> <CAP_NAME>`"));
                    }
                    let key = Key(parse_num(line_no, fields[1])?);
                    let cap = Capability::new(fields[2].1)
                        .map_err(|e| parse_err(line_no, fields[2].0, &e.to_string()))?;
                    store.priv_lists.entry(key).or_default().insert(cap);
                }
                other => {
                    return Err(parse_err(line_no, col, &format!("unknown record type {other:?}")));
                }
            }
        }
        if !seen_header {
            return Err(parse_err(1, 1, "missing header `cumac-exceptions v1`"));
        }
        Ok(store)
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}

fn parse_num(line: usize, (column, text): (usize, &str)) -> Result<u64, StoreError> {
    text.parse()
        .map_err(|_| parse_err(line, column, &format!("expected an unsigned integer, got {text:?}")))
}

fn parse_err(line: usize, column: usize, message: &str) -> StoreError {
    StoreError::Parse {
        line,
        column,
        message: message.to_string(),
    }
}
