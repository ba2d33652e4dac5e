//! Append-only, hash-chained audit log.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::SecurityError;
use crate::types::{now_ms, Timestamp};

/// `prev_hash` of the first entry: 32 zero bytes, hex encoded.
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEntry {
    pub seq: u64,
    pub ts: Timestamp,
    pub actor: String,
    pub action: String,
    pub resource: String,
    pub outcome: String,
    pub prev_hash: String,
    pub hash: String,
}

/// SHA-256 over the length-prefixed fields followed by the previous digest.
pub fn entry_digest(
    seq: u64,
    ts: Timestamp,
    actor: &str,
    action: &str,
    resource: &str,
    outcome: &str,
    prev_hash: &str,
) -> String {
    let mut h = Sha256::new();
    h.update(seq.to_be_bytes());
    h.update(ts.to_be_bytes());
    for field in [actor, action, resource, outcome] {
        h.update((field.len() as u64).to_be_bytes());
        h.update(field.as_bytes());
    }
    match hex::decode(prev_hash) {
        Ok(bytes) => h.update(&bytes),
        Err(_) => h.update(prev_hash.as_bytes()),
    }
    hex::encode(h.finalize())
}

impl AuditEntry {
    pub fn expected_hash(&self) -> String {
        entry_digest(
            self.seq,
            self.ts,
            &self.actor,
            &self.action,
            &self.resource,
            &self.outcome,
            &self.prev_hash,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub valid: bool,
    pub entries: usize,
    pub first_bad_seq: Option<u64>,
}

impl VerifyReport {
    fn bad(entries: usize, seq: u64) -> Self {
        Self {
            valid: false,
            entries,
            first_bad_seq: Some(seq),
        }
    }
}

/// Checks a chain held in memory.
pub fn verify_entries(entries: &[AuditEntry]) -> VerifyReport {
    let mut prev = GENESIS_HASH.to_string();
    for (i, e) in entries.iter().enumerate() {
        if e.seq != i as u64 || e.prev_hash != prev || e.hash != e.expected_hash() {
            return VerifyReport::bad(entries.len(), i as u64);
        }
        prev = e.hash.clone();
    }
    VerifyReport {
        valid: true,
        entries: entries.len(),
        first_bad_seq: None,
    }
}

/// Checks the stored byte form: one canonical JSON entry per line, each
/// terminated by a newline. Any byte that differs from the canonical
/// encoding is attributed to the entry on that line.
pub fn verify_bytes(bytes: &[u8]) -> VerifyReport {
    if bytes.is_empty() {
        return verify_entries(&[]);
    }
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    let unterminated = !lines.last().is_some_and(|l| l.is_empty());
    if !unterminated {
        lines.pop();
    }
    let total = lines.len();
    let mut prev = GENESIS_HASH.to_string();
    for (i, line) in lines.iter().enumerate() {
        let seq = i as u64;
        let entry = std::str::from_utf8(line).ok().and_then(|text| {
            serde_json::from_str::<AuditEntry>(text)
                .ok()
                .map(|e| (text, e))
        });
        let Some((text, e)) = entry else {
            return VerifyReport::bad(total, seq);
        };
        let canonical = serde_json::to_string(&e).is_ok_and(|c| c == text);
        if !canonical || e.seq != seq || e.prev_hash != prev || e.hash != e.expected_hash() {
            return VerifyReport::bad(total, seq);
        }
        if unterminated && i + 1 == total {
            return VerifyReport::bad(total, seq);
        }
        prev = e.hash;
    }
    VerifyReport {
        valid: true,
        entries: total,
        first_bad_seq: None,
    }
}

pub fn verify_file(path: impl AsRef<Path>) -> Result<VerifyReport, SecurityError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| SecurityError::Audit(e.to_string()))?;
    Ok(verify_bytes(&bytes))
}

struct Inner {
    entries: Vec<AuditEntry>,
    file: Option<(PathBuf, File)>,
}

/// Serialized appender. With a backing file each entry is written and
/// flushed before `append` returns.
pub struct AuditLog {
    inner: Mutex<Inner>,
}

impl Default for AuditLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(Inner {
                entries: Vec::new(),
                file: None,
            }),
        }
    }

    /// Opens or creates a log file. An existing file must verify.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SecurityError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = Vec::new();
        if path.exists() {
            let bytes = std::fs::read(&path).map_err(|e| SecurityError::Audit(e.to_string()))?;
            let report = verify_bytes(&bytes);
            if let Some(seq) = report.first_bad_seq {
                return Err(SecurityError::Tampered { seq });
            }
            for line in bytes.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
                entries.push(
                    serde_json::from_slice(line)
                        .map_err(|e| SecurityError::Audit(e.to_string()))?,
                );
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| SecurityError::Audit(e.to_string()))?;
        Ok(Self {
            inner: Mutex::new(Inner {
                entries,
                file: Some((path, file)),
            }),
        })
    }

    pub fn append(
        &self,
        actor: &str,
        action: &str,
        resource: &str,
        outcome: &str,
    ) -> Result<AuditEntry, SecurityError> {
        self.append_at(now_ms(), actor, action, resource, outcome)
    }

    pub fn append_at(
        &self,
        ts: Timestamp,
        actor: &str,
        action: &str,
        resource: &str,
        outcome: &str,
    ) -> Result<AuditEntry, SecurityError> {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let seq = inner.entries.len() as u64;
        let prev_hash = inner
            .entries
            .last()
            .map_or_else(|| GENESIS_HASH.to_string(), |e| e.hash.clone());
        let hash = entry_digest(seq, ts, actor, action, resource, outcome, &prev_hash);
        let entry = AuditEntry {
            seq,
            ts,
            actor: actor.to_string(),
            action: action.to_string(),
            resource: resource.to_string(),
            outcome: outcome.to_string(),
            prev_hash,
            hash,
        };
        if let Some((_, file)) = inner.file.as_mut() {
            let mut line =
                serde_json::to_string(&entry).map_err(|e| SecurityError::Audit(e.to_string()))?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| SecurityError::Audit(e.to_string()))?;
        }
        inner.entries.push(entry.clone());
        Ok(entry)
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entries
            .clone()
    }

    /// Entries with `seq >= from`, at most `limit`.
    pub fn page(&self, from: u64, limit: usize) -> Vec<AuditEntry> {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entries
            .iter()
            .skip(from as usize)
            .take(limit)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entries
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.inner
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .file
            .as_ref()
            .map(|(p, _)| p.clone())
    }

    pub fn verify(&self) -> VerifyReport {
        verify_entries(&self.inner.lock().unwrap_or_else(|e| e.into_inner()).entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(n: usize) -> AuditLog {
        let log = AuditLog::in_memory();
        for i in 0..n {
            log.append_at(
                i as i64,
                "planner",
                "write",
                &format!("/feedback/{i}"),
                "allow",
            )
            .unwrap();
        }
        log
    }

    #[test]
    fn genesis_and_chain() {
        let log = filled(3);
        let e = log.entries();
        assert_eq!(e[0].prev_hash, GENESIS_HASH);
        assert_eq!(e[0].prev_hash.len(), 64);
        assert_eq!(e[1].prev_hash, e[0].hash);
        assert!(log.verify().valid);
    }

    #[test]
    fn field_edit_detected() {
        let mut e = filled(10).entries();
        e[4].outcome = "deny".into();
        assert_eq!(verify_entries(&e).first_bad_seq, Some(4));
    }

    #[test]
    fn file_round_trip_and_trailing_newline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.log");
        {
            let log = AuditLog::open(&path).unwrap();
            for i in 0..5 {
                log.append(
                    "admin",
                    "read",
                    "/audit",
                    if i % 2 == 0 { "allow" } else { "deny" },
                )
                .unwrap();
            }
        }
        let log = AuditLog::open(&path).unwrap();
        log.append("admin", "read", "/audit", "allow").unwrap();
        assert_eq!(log.len(), 6);
        assert!(verify_file(&path).unwrap().valid);

        let mut bytes = std::fs::read(&path).unwrap();
        *bytes.last_mut().unwrap() = b' ';
        assert_eq!(verify_bytes(&bytes).first_bad_seq, Some(5));
        bytes.pop();
        assert_eq!(verify_bytes(&bytes).first_bad_seq, Some(5));
    }

    #[test]
    fn case_flip_in_hash_detected() {
        let log = filled(2);
        let mut bytes: Vec<u8> = log
            .entries()
            .iter()
            .flat_map(|e| format!("{}\n", serde_json::to_string(e).unwrap()).into_bytes())
            .collect();
        assert!(verify_bytes(&bytes).valid);
        let pos = bytes
            .iter()
            .rposition(|b| b.is_ascii_lowercase() && b.is_ascii_hexdigit())
            .unwrap();
        bytes[pos] = bytes[pos].to_ascii_uppercase();
        assert_eq!(verify_bytes(&bytes).first_bad_seq, Some(1));
    }
}
