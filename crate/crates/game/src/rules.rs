//! Progression rules: awards, level gates, deadlines and locked problems.

use chrono::{DateTime, NaiveDate, Utc};
use cq_problems::{GradeResult, ProblemInstance};
use serde::{Deserialize, Serialize};

use crate::campaign::{CalendarCheckpoint, Campaign, LevelSpec, LEVEL_COUNT};
use crate::error::{GameError, Result};
use crate::player::{AwardEvent, PlayerState};

/// Credits a solved instance. An unsolved grade changes nothing and yields
/// an all-zero event that is not recorded.
pub fn award(
    player: &PlayerState,
    instance: &ProblemInstance,
    grade: &GradeResult,
    campaign: &Campaign,
    now: DateTime<Utc>,
) -> Result<(PlayerState, AwardEvent)> {
    if instance.campaign != player.campaign || campaign.id != player.campaign {
        return Err(GameError::WrongLevel(format!(
            "instance of `{}` offered to a `{}` player",
            instance.campaign, player.campaign
        )));
    }
    if instance.level != player.level {
        return Err(GameError::WrongLevel(format!("instance is level {}, player is level {}", instance.level, player.level)));
    }
    let spec = campaign.level(player.level).ok_or_else(|| GameError::WrongLevel(format!("no level {}", player.level)))?;
    if !spec.pool.contains(&instance.template_id) {
        return Err(GameError::WrongLevel(format!("`{}` is not in the level {} pool", instance.template_id, spec.level)));
    }
    if player.solved.contains(&instance.instance_id) {
        return Err(GameError::DuplicateSolve(instance.instance_id.clone()));
    }
    let mut event = AwardEvent {
        timestamp: now,
        instance_id: Some(instance.instance_id.clone()),
        template_id: Some(instance.template_id.clone()),
        level: player.level,
        xp: 0,
        coins: 0,
        reputation: 0,
        level_up: false,
        secondary: instance.secondary,
        outcomes: instance.outcomes.clone(),
    };
    if !grade.solved {
        return Ok((player.clone(), event));
    }
    event.xp = u64::from(instance.xp);
    event.coins = u64::from(instance.coins);
    event.reputation = event.xp / campaign.rep_cost(player.level);
    let mut next = player.clone();
    next.apply(event.clone()).map_err(|m| GameError::InvalidEvent { index: next.history.len(), message: m })?;
    Ok((next, event))
}

/// Shortfall against one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Missing {
    Solved { missing: u32 },
    Coins { missing: u64 },
    Reputation { missing: u64 },
}

impl Missing {
    pub fn describe(list: &[Missing]) -> String {
        let parts: Vec<String> = list
            .iter()
            .map(|m| match m {
                Missing::Solved { missing } => format!("{missing} more solved problems"),
                Missing::Coins { missing } => format!("{missing} more coins"),
                Missing::Reputation { missing } => format!("{missing} more reputation"),
            })
            .collect();
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advancement {
    pub eligible: bool,
    /// Eligible at the last level: advancing finishes the campaign.
    pub completes_campaign: bool,
    pub missing: Vec<Missing>,
}

/// Gates for leaving the current level: solved count and coins of this
/// level, reputation of the next one. A finished campaign is never eligible.
pub fn can_advance(player: &PlayerState, campaign: &Campaign) -> Advancement {
    let Some(spec) = campaign.level(player.level).filter(|_| !player.completed) else {
        return Advancement { eligible: false, completes_campaign: false, missing: Vec::new() };
    };
    let mut missing = Vec::new();
    let solved = player.solved_in_level(player.level);
    if solved < spec.required_solved_count {
        missing.push(Missing::Solved { missing: spec.required_solved_count - solved });
    }
    if player.coins < spec.coin_threshold {
        missing.push(Missing::Coins { missing: spec.coin_threshold - player.coins });
    }
    if let Some(next) = campaign.level(player.level + 1) {
        if player.reputation < next.reputation_threshold {
            missing.push(Missing::Reputation { missing: next.reputation_threshold - player.reputation });
        }
    }
    let eligible = missing.is_empty();
    Advancement { eligible, completes_campaign: eligible && player.level == LEVEL_COUNT, missing }
}

pub fn advance(player: &PlayerState, campaign: &Campaign, now: DateTime<Utc>) -> Result<(PlayerState, AwardEvent)> {
    if player.completed {
        return Err(GameError::CampaignComplete);
    }
    let gate = can_advance(player, campaign);
    if !gate.eligible {
        return Err(GameError::RequirementsUnmet(gate.missing));
    }
    let event = AwardEvent::level_up(now, player.level);
    let mut next = player.clone();
    next.apply(event.clone()).map_err(|m| GameError::InvalidEvent { index: next.history.len(), message: m })?;
    Ok((next, event))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeadlineStatus {
    OnTrack,
    Behind { deficit: u64 },
}

/// Judged against the latest checkpoint on or before `today`.
pub fn deadline_status(player: &PlayerState, calendar: &[CalendarCheckpoint], today: NaiveDate) -> DeadlineStatus {
    match calendar.iter().rev().find(|c| c.date <= today) {
        Some(c) if player.coins < c.min_coins => DeadlineStatus::Behind { deficit: c.min_coins - player.coins },
        _ => DeadlineStatus::OnTrack,
    }
}

/// Coins earned up to the end of `date`, from event timestamps.
pub fn coins_by(player: &PlayerState, date: NaiveDate) -> u64 {
    player.history.iter().filter(|e| e.timestamp.date_naive() <= date).map(|e| e.coins).sum()
}

/// Locked templates need the level threshold plus their surcharge.
pub fn unlock_check(player: &PlayerState, template_id: &str, spec: &LevelSpec) -> Result<bool> {
    if !spec.pool.iter().any(|t| t == template_id) {
        return Err(GameError::UnknownTemplate(template_id.to_string()));
    }
    Ok(match spec.surcharge(template_id) {
        Some(extra) => player.reputation >= spec.reputation_threshold + extra,
        None => true,
    })
}
