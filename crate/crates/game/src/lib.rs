//! Progression over the four campaigns: experience, coins, level-scaled
//! reputation, sequential levels and a coin calendar.

pub mod campaign;
pub mod error;
pub mod gradebook;
pub mod player;
pub mod rules;
pub mod simulate;

pub use campaign::{
    find_campaign, load_campaigns, rep_cost, shipped_campaigns, CalendarCheckpoint, Campaign, LevelSpec, LockedTemplate,
    Regime, LEVEL_COUNT,
};
pub use error::{GameError, Result};
pub use gradebook::{export_gradebook, gradebook_header};
pub use player::{AwardEvent, PlayerState};
pub use rules::{advance, award, can_advance, coins_by, deadline_status, unlock_check, Advancement, DeadlineStatus, Missing};
pub use simulate::{greedy_script, run_script, script_clock, Action, Simulation};
