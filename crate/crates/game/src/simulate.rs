//! Scripted players for testing progression end to end.

use chrono::{DateTime, Duration, TimeZone, Utc};
use cq_problems::{expected_answers, grade, instantiate, Answer, Library};
use serde::{Deserialize, Serialize};

use crate::campaign::Campaign;
use crate::error::{GameError, Result};
use crate::player::PlayerState;
use crate::rules::{advance, award, can_advance, unlock_check};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Answer the instance correctly.
    Solve { pool_index: usize, seed: u64 },
    /// Answer it wrongly.
    Miss { pool_index: usize, seed: u64 },
    Advance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub level: u8,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub state: PlayerState,
    pub steps: Vec<Step>,
}

/// Fixed clock so that runs are reproducible; one minute per action.
pub fn script_clock(step: usize) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2027, 2, 1, 8, 0, 0).unwrap() + Duration::minutes(step as i64)
}

fn wrong(answers: Vec<Answer>) -> Vec<Answer> {
    answers
        .into_iter()
        .map(|a| match a {
            Answer::Number(x) => Answer::Number(if x == 0.0 { 1.0 } else { -3.0 * x }),
            Answer::Phasor { magnitude, degrees } => Answer::Phasor { magnitude: 3.0 * magnitude + 1.0, degrees },
            Answer::Choice { choice } => Answer::Choice { choice: choice + 1 },
            Answer::Diagnosis { .. } => Answer::Diagnosis { kind: "NONE".into(), location: String::new() },
        })
        .collect()
}

/// Runs `actions` from a fresh player. Rejected actions are logged with
/// their error and leave the state alone.
pub fn run_script(campaign: &Campaign, library: &Library, player_id: &str, actions: &[Action]) -> Result<Simulation> {
    let mut state = PlayerState::new(player_id, &campaign.id);
    let mut steps = Vec::new();
    for (n, action) in actions.iter().enumerate() {
        let now = script_clock(n);
        let level = state.level;
        let outcome = match *action {
            Action::Advance => match advance(&state, campaign, now) {
                Ok((next, _)) => {
                    state = next;
                    "advanced".to_string()
                }
                Err(e) => e.to_string(),
            },
            Action::Solve { pool_index, seed } | Action::Miss { pool_index, seed } => {
                let spec = campaign.level(state.level).ok_or(GameError::CampaignComplete)?;
                let id = &spec.pool[pool_index % spec.pool.len()];
                if !unlock_check(&state, id, spec)? {
                    steps.push(Step { action: *action, level, outcome: "locked".into() });
                    continue;
                }
                let template = library.get(id).ok_or_else(|| GameError::UnknownTemplate(id.clone()))?;
                let instance = instantiate(template, seed).map_err(|e| GameError::UnknownTemplate(e.to_string()))?;
                let mut answers = expected_answers(&instance);
                if matches!(action, Action::Miss { .. }) {
                    answers = wrong(answers);
                }
                let result = grade(&instance, &answers).map_err(|e| GameError::UnknownTemplate(e.to_string()))?;
                match award(&state, &instance, &result, campaign, now) {
                    Ok((next, event)) => {
                        state = next;
                        format!("+{} xp +{} coins +{} reputation", event.xp, event.coins, event.reputation)
                    }
                    Err(e) => e.to_string(),
                }
            }
        };
        steps.push(Step { action: *action, level, outcome });
    }
    Ok(Simulation { state, steps })
}

/// Works through each pool in order, advancing as soon as the gates allow.
/// Returns when the campaign is complete or a level's pool is exhausted.
pub fn greedy_script(campaign: &Campaign, library: &Library, player_id: &str, seed: u64) -> Result<Simulation> {
    let mut actions = Vec::new();
    let mut state = PlayerState::new(player_id, &campaign.id);
    while !state.completed {
        let spec = campaign.level(state.level).ok_or(GameError::CampaignComplete)?;
        for index in 0..spec.pool.len() {
            if can_advance(&state, campaign).eligible {
                break;
            }
            actions.push(Action::Solve { pool_index: index, seed: seed.wrapping_add(index as u64) });
            state = run_script(campaign, library, player_id, &actions)?.state;
        }
        if !can_advance(&state, campaign).eligible {
            break;
        }
        actions.push(Action::Advance);
        state = run_script(campaign, library, player_id, &actions)?.state;
    }
    run_script(campaign, library, player_id, &actions)
}
