//! Event-sourced player state: the history is the truth and every other
//! field is a fold over it.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use cq_problems::OutcomeTag;
use serde::{Deserialize, Serialize};

use crate::campaign::LEVEL_COUNT;
use crate::error::{GameError, Result};

/// One state transition. Award events carry an instance; level-up events
/// carry none and have zero deltas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwardEvent {
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    /// Player level when the event happened.
    pub level: u8,
    pub xp: u64,
    pub coins: u64,
    pub reputation: u64,
    pub level_up: bool,
    #[serde(default)]
    pub secondary: bool,
    #[serde(default)]
    pub outcomes: Vec<OutcomeTag>,
}

impl AwardEvent {
    pub fn level_up(timestamp: DateTime<Utc>, level: u8) -> Self {
        AwardEvent {
            timestamp,
            instance_id: None,
            template_id: None,
            level,
            xp: 0,
            coins: 0,
            reputation: 0,
            level_up: true,
            secondary: false,
            outcomes: Vec::new(),
        }
    }

    pub fn is_award(&self) -> bool {
        !self.level_up && self.instance_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: String,
    pub campaign: String,
    /// 1..=5, never decreasing.
    pub level: u8,
    /// Set by the level-up past level 5.
    pub completed: bool,
    pub xp: u64,
    /// Cumulative earnings; coins are never spent.
    pub coins: u64,
    pub reputation: u64,
    pub solved: BTreeSet<String>,
    pub history: Vec<AwardEvent>,
}

impl PlayerState {
    pub fn new(player_id: &str, campaign: &str) -> Self {
        PlayerState {
            player_id: player_id.to_string(),
            campaign: campaign.to_string(),
            level: 1,
            completed: false,
            xp: 0,
            coins: 0,
            reputation: 0,
            solved: BTreeSet::new(),
            history: Vec::new(),
        }
    }

    /// Applies one event after checking it is legal in this state.
    pub fn apply(&mut self, event: AwardEvent) -> std::result::Result<(), String> {
        if event.level != self.level {
            return Err(format!("event at level {} but player is at level {}", event.level, self.level));
        }
        if event.level_up {
            if event.instance_id.is_some() || event.xp + event.coins + event.reputation != 0 {
                return Err("level-up events carry no instance and no deltas".into());
            }
            if self.completed {
                return Err("campaign already complete".into());
            }
            if self.level == LEVEL_COUNT {
                self.completed = true;
            } else {
                self.level += 1;
            }
        } else {
            let id = event.instance_id.as_ref().ok_or("award event without an instance")?;
            if !self.solved.insert(id.clone()) {
                return Err(format!("instance `{id}` awarded twice"));
            }
            self.xp += event.xp;
            self.coins += event.coins;
            self.reputation += event.reputation;
        }
        self.history.push(event);
        Ok(())
    }

    /// Pure fold of `events` over a fresh player.
    pub fn replay<'a>(player_id: &str, campaign: &str, events: impl IntoIterator<Item = &'a AwardEvent>) -> Result<Self> {
        let mut state = PlayerState::new(player_id, campaign);
        for (index, e) in events.into_iter().enumerate() {
            state.apply(e.clone()).map_err(|message| GameError::InvalidEvent { index, message })?;
        }
        Ok(state)
    }

    /// Main-quest solves at `level`; secondary quests never count.
    pub fn solved_in_level(&self, level: u8) -> u32 {
        self.history.iter().filter(|e| e.is_award() && e.level == level && !e.secondary).count() as u32
    }
}
