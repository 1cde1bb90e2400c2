//! In-memory state as a pure fold over log records.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use cq_game::{AwardEvent, PlayerState};
use cq_problems::{Answer, GradeResult};
use serde::{Deserialize, Serialize};

use crate::error::{PlatformError, Result};
use crate::eventlog::{EventRecord, Payload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issued {
    pub template_id: String,
    pub seed: u64,
    pub issued_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submitted {
    pub instance_id: String,
    pub answers: Vec<Answer>,
    pub grade: GradeResult,
    pub event: AwardEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    pub state: PlayerState,
    /// Keyed by instance id.
    pub issued: BTreeMap<String, Issued>,
    /// Keyed by idempotency key.
    pub submissions: BTreeMap<String, Submitted>,
}

impl PlayerRecord {
    /// Whether any award in the history credits `instance_id`.
    pub fn solved(&self, instance_id: &str) -> bool {
        self.state.solved.contains(instance_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Store {
    pub last_seq: u64,
    pub players: BTreeMap<String, PlayerRecord>,
}

impl Store {
    pub fn player(&self, id: &str) -> Option<&PlayerRecord> {
        self.players.get(id)
    }

    /// Applies one record. Every check runs before anything changes, so a
    /// rejected record leaves the store as it was.
    pub fn apply(&mut self, record: &EventRecord) -> std::result::Result<(), String> {
        if record.seq <= self.last_seq {
            return Err(format!("sequence {} not after {}", record.seq, self.last_seq));
        }
        let id = &record.player;
        match &record.payload {
            Payload::Enroll { campaign } => {
                if self.players.contains_key(id) {
                    return Err(format!("player `{id}` already enrolled"));
                }
                let state = PlayerState::new(id, campaign);
                self.players.insert(id.clone(), PlayerRecord { state, issued: BTreeMap::new(), submissions: BTreeMap::new() });
            }
            Payload::Issue { instance_id, template_id, seed, issued_at } => {
                let p = self.players.get_mut(id).ok_or_else(|| format!("unknown player `{id}`"))?;
                if p.issued.contains_key(instance_id) {
                    return Err(format!("instance `{instance_id}` issued twice"));
                }
                let issued = Issued { template_id: template_id.clone(), seed: *seed, issued_at: *issued_at };
                p.issued.insert(instance_id.clone(), issued);
            }
            Payload::Submission { instance_id, idempotency_key, answers, grade, event } => {
                let p = self.players.get_mut(id).ok_or_else(|| format!("unknown player `{id}`"))?;
                if !p.issued.contains_key(instance_id) {
                    return Err(format!("instance `{instance_id}` was not issued to `{id}`"));
                }
                if p.submissions.contains_key(idempotency_key) {
                    return Err(format!("idempotency key `{idempotency_key}` reused"));
                }
                if event.level_up || event.instance_id.as_deref() != Some(instance_id) {
                    return Err("submission event must credit its own instance".into());
                }
                if grade.solved {
                    p.state.apply(event.clone())?;
                } else if event.xp + event.coins + event.reputation != 0 {
                    return Err("unsolved submission carries deltas".into());
                }
                let submitted =
                    Submitted { instance_id: instance_id.clone(), answers: answers.clone(), grade: grade.clone(), event: event.clone() };
                p.submissions.insert(idempotency_key.clone(), submitted);
            }
            Payload::Advance { event } => {
                let p = self.players.get_mut(id).ok_or_else(|| format!("unknown player `{id}`"))?;
                if !event.level_up {
                    return Err("advance without a level-up event".into());
                }
                p.state.apply(event.clone())?;
            }
        }
        self.last_seq = record.seq;
        Ok(())
    }

    /// Fold from `self` over `records`.
    pub fn extend<'a>(mut self, records: impl IntoIterator<Item = &'a EventRecord>) -> Result<Store> {
        for r in records {
            self.apply(r).map_err(|message| PlatformError::Rejected { seq: r.seq, message })?;
        }
        Ok(self)
    }

    pub fn replay<'a>(records: impl IntoIterator<Item = &'a EventRecord>) -> Result<Store> {
        Store::default().extend(records)
    }

    pub fn states(&self) -> BTreeMap<String, PlayerState> {
        self.players.iter().map(|(k, v)| (k.clone(), v.state.clone())).collect()
    }
}
