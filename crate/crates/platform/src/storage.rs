//! A storage directory: `events.log` plus an optional `snapshot.json`.
//! Snapshots are derived data; a missing, stale or damaged snapshot only
//! costs a full replay.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{PlatformError, Result};
use crate::eventlog::{checksum, read_log, EventLog, EventRecord, Payload};
use crate::store::Store;

pub const LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Serialize, Deserialize)]
struct SnapshotFile<'a> {
    checksum: String,
    #[serde(borrow)]
    store: &'a RawValue,
}

/// Writes through a temporary file and a rename so readers never see half
/// a snapshot.
pub fn write_snapshot(dir: &Path, store: &Store) -> Result<()> {
    let body = serde_json::to_string(store).expect("store serialises");
    let text = format!("{{\"checksum\":\"{}\",\"store\":{body}}}\n", checksum(body.as_bytes()));
    let target = dir.join(SNAPSHOT_FILE);
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let io = |e: std::io::Error| PlatformError::io(tmp.display(), e);
    let mut f = File::create(&tmp).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, &target).map_err(|e| PlatformError::io(target.display(), e))?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

/// The snapshot if present and intact.
pub fn read_snapshot(dir: &Path) -> Option<Store> {
    let text = std::fs::read_to_string(dir.join(SNAPSHOT_FILE)).ok()?;
    let file: SnapshotFile = serde_json::from_str(&text).ok()?;
    if checksum(file.store.get().as_bytes()) != file.checksum {
        return None;
    }
    serde_json::from_str(file.store.get()).ok()
}

/// State implied by `records`, starting from `snapshot` when it is a
/// prefix of them.
pub fn recover(snapshot: Option<Store>, records: &[EventRecord]) -> Result<Store> {
    if let Some(snap) = snapshot {
        let covered = snap.last_seq == 0 || records.iter().any(|r| r.seq == snap.last_seq);
        if covered {
            let last = snap.last_seq;
            return snap.extend(records.iter().filter(|r| r.seq > last));
        }
    }
    Store::replay(records)
}

/// Read-only view of a storage directory, for instructor tools.
pub fn load_store(dir: &Path) -> Result<Store> {
    let parsed = read_log(&dir.join(LOG_FILE))?;
    recover(read_snapshot(dir), &parsed.records)
}

#[derive(Debug)]
pub struct Storage {
    dir: PathBuf,
    log: EventLog,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl Storage {
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<(Storage, Store)> {
        std::fs::create_dir_all(dir).map_err(|e| PlatformError::io(dir.display(), e))?;
        let (log, parsed) = EventLog::open(&dir.join(LOG_FILE))?;
        let store = recover(read_snapshot(dir), &parsed.records)?;
        let storage = Storage { dir: dir.to_path_buf(), log, snapshot_every: snapshot_every.max(1), since_snapshot: 0 };
        Ok((storage, store))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Checks `payload` against `store`, appends it durably, then applies it.
    /// A payload the store would reject never reaches the log.
    pub fn append(&mut self, store: &mut Store, player: &str, payload: Payload) -> Result<EventRecord> {
        let probe = EventRecord { seq: self.log.next_seq(), player: player.to_string(), payload, checksum: String::new() };
        let mut scratch = Store { last_seq: store.last_seq, players: Default::default() };
        if let Some(p) = store.players.get(player) {
            scratch.players.insert(player.to_string(), p.clone());
        }
        scratch.apply(&probe).map_err(|message| PlatformError::Rejected { seq: probe.seq, message })?;
        let record = self.log.append(player, probe.payload)?;
        let player_record = scratch.players.remove(player).expect("applied records name a player");
        store.players.insert(player.to_string(), player_record);
        store.last_seq = record.seq;
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot(store)?;
        }
        Ok(record)
    }

    pub fn snapshot(&mut self, store: &Store) -> Result<()> {
        write_snapshot(&self.dir, store)?;
        self.since_snapshot = 0;
        Ok(())
    }
}
