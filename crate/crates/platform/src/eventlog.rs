//! Append-only event log. One JSON object per line:
//! `{"checksum":"<sha256 hex of record>","record":{"seq":..,"player":..,"payload":..}}`.
//! The checksum covers the exact record bytes, so verification never
//! depends on re-serialising.

use std::fs::{File, OpenOptions, TryLockError};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use cq_game::AwardEvent;
use cq_problems::{Answer, GradeResult};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{PlatformError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Roster import: the player joins a campaign at level 1.
    Enroll { campaign: String },
    /// An instance handed to the player; regenerated from template and seed.
    Issue { instance_id: String, template_id: String, seed: u64, issued_at: DateTime<Utc> },
    /// A graded answer set. `event` changes the state only when solved.
    Submission { instance_id: String, idempotency_key: String, answers: Vec<Answer>, grade: GradeResult, event: AwardEvent },
    Advance { event: AwardEvent },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub player: String,
    pub payload: Payload,
    pub checksum: String,
}

#[derive(Serialize)]
struct Body<'a> {
    seq: u64,
    player: &'a str,
    payload: &'a Payload,
}

#[derive(Deserialize)]
struct OwnedBody {
    seq: u64,
    player: String,
    payload: Payload,
}

#[derive(Deserialize)]
struct Line<'a> {
    checksum: String,
    #[serde(borrow)]
    record: &'a RawValue,
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The record and its log line, newline included.
pub fn encode(seq: u64, player: &str, payload: Payload) -> (EventRecord, String) {
    let body = serde_json::to_string(&Body { seq, player, payload: &payload }).expect("payloads serialise");
    let sum = checksum(body.as_bytes());
    let line = format!("{{\"checksum\":\"{sum}\",\"record\":{body}}}\n");
    (EventRecord { seq, player: player.to_string(), payload, checksum: sum }, line)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub records: Vec<EventRecord>,
    /// Bytes up to and including the last valid newline.
    pub valid_len: u64,
    /// Bytes of an unterminated tail, dropped as torn.
    pub torn_bytes: u64,
}

fn decode_line(bytes: &[u8], line: usize) -> Result<EventRecord> {
    let mismatch = || PlatformError::ChecksumMismatch { line };
    let parsed: Line = serde_json::from_slice(bytes).map_err(|_| mismatch())?;
    let raw = parsed.record.get();
    let sum = checksum(raw.as_bytes());
    if sum != parsed.checksum {
        return Err(mismatch());
    }
    let body: OwnedBody =
        serde_json::from_str(raw).map_err(|e| PlatformError::CorruptLog { line, message: e.to_string() })?;
    Ok(EventRecord { seq: body.seq, player: body.player, payload: body.payload, checksum: sum })
}

/// Splits log bytes into verified records. A final line without its
/// newline was never committed and is reported as torn; any terminated
/// line that fails verification is fatal.
pub fn parse_log(bytes: &[u8]) -> Result<ParsedLog> {
    let mut records: Vec<EventRecord> = Vec::new();
    let mut start = 0usize;
    let mut line = 0usize;
    while let Some(offset) = bytes[start..].iter().position(|&b| b == b'\n') {
        line += 1;
        let record = decode_line(&bytes[start..start + offset], line)?;
        if let Some(prev) = records.last() {
            if record.seq <= prev.seq {
                return Err(PlatformError::CorruptLog { line, message: format!("sequence {} after {}", record.seq, prev.seq) });
            }
        }
        records.push(record);
        start += offset + 1;
    }
    Ok(ParsedLog { records, valid_len: start as u64, torn_bytes: (bytes.len() - start) as u64 })
}

/// Reads without locking or repairing; a missing file is an empty log.
pub fn read_log(path: &Path) -> Result<ParsedLog> {
    match std::fs::read(path) {
        Ok(bytes) => parse_log(&bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(ParsedLog { records: Vec::new(), valid_len: 0, torn_bytes: 0 }),
        Err(e) => Err(PlatformError::io(path.display(), e)),
    }
}

/// The single appender. Holds an exclusive lock on the file for its lifetime.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    len: u64,
    next_seq: u64,
}

impl EventLog {
    /// Opens or creates the log, cuts a torn tail and returns the records.
    pub fn open(path: &Path) -> Result<(EventLog, ParsedLog)> {
        let io = |e: std::io::Error| PlatformError::io(path.display(), e);
        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path).map_err(io)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(PlatformError::Locked(path.display().to_string())),
            Err(TryLockError::Error(e)) => return Err(io(e)),
        }
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let parsed = parse_log(&bytes)?;
        if parsed.torn_bytes > 0 {
            file.set_len(parsed.valid_len).map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        file.seek(SeekFrom::Start(parsed.valid_len)).map_err(io)?;
        let next_seq = parsed.records.last().map_or(1, |r| r.seq + 1);
        Ok((EventLog { path: path.to_path_buf(), file, len: parsed.valid_len, next_seq }, parsed))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes and fsyncs one record. On failure the file is cut back to its
    /// previous length so that no partial line survives.
    pub fn append(&mut self, player: &str, payload: Payload) -> Result<EventRecord> {
        let (record, line) = encode(self.next_seq, player, payload);
        let written = self.file.write_all(line.as_bytes()).and_then(|()| self.file.sync_data());
        if let Err(e) = written {
            let _ = self.file.set_len(self.len).and_then(|()| self.file.seek(SeekFrom::Start(self.len)).map(|_| ()));
            return Err(PlatformError::io(self.path.display(), e));
        }
        self.len += line.len() as u64;
        self.next_seq += 1;
        Ok(record)
    }
}
