//! CSV export of progress and outcome coverage.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use cq_problems::taxonomy::{Bloom, Taxonomy};

use crate::campaign::Campaign;
use crate::error::{GameError, Result};
use crate::player::PlayerState;
use crate::rules::{coins_by, deadline_status, DeadlineStatus};

/// Column order is fixed: identity, totals, current deadline, one column
/// per calendar checkpoint, then one per bloom × topic pair in taxonomy
/// order.
pub fn gradebook_header(campaign: &Campaign, taxonomy: &Taxonomy) -> Vec<String> {
    let mut h: Vec<String> =
        ["player", "campaign", "level", "completed", "xp", "coins", "reputation", "solved", "deadline"].map(String::from).into();
    h.extend(campaign.calendar.iter().map(|c| format!("checkpoint:{}", c.date)));
    for bloom in Bloom::ALL {
        h.extend(taxonomy.topics.iter().map(|t| format!("{}:{}", bloom.as_str(), t.id)));
    }
    h
}

fn status_text(s: DeadlineStatus) -> String {
    match s {
        DeadlineStatus::OnTrack => "ON_TRACK".into(),
        DeadlineStatus::Behind { deficit } => format!("BEHIND({deficit})"),
    }
}

pub fn export_gradebook(players: &[PlayerState], campaign: &Campaign, taxonomy: &Taxonomy, today: NaiveDate) -> Result<String> {
    if players.iter().any(|p| p.campaign != campaign.id) {
        return Err(GameError::MixedCampaigns);
    }
    let csv_err = |e: csv::Error| GameError::Csv(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(gradebook_header(campaign, taxonomy)).map_err(csv_err)?;
    for p in players {
        let mut counts: BTreeMap<(Bloom, &str), u64> = BTreeMap::new();
        for e in p.history.iter().filter(|e| e.is_award()) {
            for tag in &e.outcomes {
                *counts.entry((tag.bloom, tag.topic.as_str())).or_default() += 1;
            }
        }
        let mut row = vec![
            p.player_id.clone(),
            p.campaign.clone(),
            p.level.to_string(),
            p.completed.to_string(),
            p.xp.to_string(),
            p.coins.to_string(),
            p.reputation.to_string(),
            p.solved.len().to_string(),
            status_text(deadline_status(p, &campaign.calendar, today)),
        ];
        for c in &campaign.calendar {
            row.push(if c.date > today {
                "PENDING".into()
            } else {
                let earned = coins_by(p, c.date);
                if earned >= c.min_coins { "MET".into() } else { format!("MISSED({})", c.min_coins - earned) }
            });
        }
        for bloom in Bloom::ALL {
            for t in &taxonomy.topics {
                row.push(counts.get(&(bloom, t.id.as_str())).copied().unwrap_or(0).to_string());
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| GameError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| GameError::Csv(e.to_string()))
}
