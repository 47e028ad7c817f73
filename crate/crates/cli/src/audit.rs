//! Append-only audit log under `FOCED_HOME`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const AUDIT_FILE: &str = "audit.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub wall_time: String,
    pub command: String,
    pub inputs_digest: String,
    /// `ok`, `violations(n)` or `error(kind)`.
    pub outcome: String,
}

pub fn home() -> PathBuf {
    if let Some(dir) = std::env::var_os("FOCED_HOME") {
        return PathBuf::from(dir);
    }
    match std::env::var_os("HOME") {
        Some(h) => Path::new(&h).join(".foced"),
        None => PathBuf::from(".foced"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest over the per-input digests, in argument order.
pub fn combined_digest(inputs: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    for (path, digest) in inputs {
        h.update(path.as_bytes());
        h.update([0]);
        h.update(digest.as_bytes());
        h.update([b'\n']);
    }
    hex::encode(h.finalize())
}

/// Appends one record, holding an exclusive lock on the log so concurrent
/// invocations get consecutive sequence numbers.
pub fn append(home: &Path, command: &str, inputs_digest: &str, outcome: &str) -> std::io::Result<AuditRecord> {
    fs::create_dir_all(home)?;
    let mut file = OpenOptions::new().read(true).append(true).create(true).open(home.join(AUDIT_FILE))?;
    file.lock()?;
    let result = append_locked(&mut file, command, inputs_digest, outcome);
    file.unlock()?;
    result
}

fn append_locked(file: &mut File, command: &str, inputs_digest: &str, outcome: &str) -> std::io::Result<AuditRecord> {
    file.seek(SeekFrom::Start(0))?;
    let mut last = 0;
    for line in BufReader::new(&*file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AuditRecord = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("audit log: {e}")))?;
        last = record.seq;
    }
    let record = AuditRecord {
        seq: last + 1,
        wall_time: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        command: command.to_string(),
        inputs_digest: inputs_digest.to_string(),
        outcome: outcome.to_string(),
    };
    let mut line = serde_json::to_string(&record).expect("record serializes");
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()?;
    Ok(record)
}
