//! Campaign definitions: five sequential levels, template pools and a coin
//! calendar.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use cq_problems::taxonomy::Taxonomy;
use cq_problems::template::CAMPAIGNS;
use cq_problems::Library;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

pub const LEVEL_COUNT: u8 = 5;

/// Physics allowed in a level's pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// No AC anywhere.
    Dc,
    /// Every template is AC or three-phase.
    Ac,
    /// Every template carries a three-phase topic tag.
    ThreePhase,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockedTemplate {
    pub template: String,
    /// Reputation needed on top of the level threshold.
    pub surcharge: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub level: u8,
    pub theme: String,
    pub regime: Regime,
    pub required_solved_count: u32,
    /// Cumulative coins needed to leave the level.
    pub coin_threshold: u64,
    /// Reputation needed to enter the level.
    pub reputation_threshold: u64,
    pub pool: Vec<String>,
    #[serde(default)]
    pub locked: Vec<LockedTemplate>,
}

impl LevelSpec {
    pub fn surcharge(&self, template: &str) -> Option<u64> {
        self.locked.iter().find(|l| l.template == template).map(|l| l.surcharge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarCheckpoint {
    pub date: NaiveDate,
    pub min_coins: u64,
}

fn default_rep_cost_base() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub schema: u32,
    pub id: String,
    pub title: String,
    /// Experience per reputation point at level 1; doubles every level.
    #[serde(default = "default_rep_cost_base")]
    pub rep_cost_base: u64,
    pub levels: Vec<LevelSpec>,
    #[serde(default)]
    pub calendar: Vec<CalendarCheckpoint>,
}

const SHIPPED: [(&str, &str); 4] = [
    ("campaigns/appliances.json", include_str!("../../../data/campaigns/appliances.json")),
    ("campaigns/power-plant.json", include_str!("../../../data/campaigns/power-plant.json")),
    ("campaigns/households.json", include_str!("../../../data/campaigns/households.json")),
    ("campaigns/mars.json", include_str!("../../../data/campaigns/mars.json")),
];

impl Campaign {
    /// `rep_cost(L) = base · 2^(L−1)`.
    pub fn rep_cost(&self, level: u8) -> u64 {
        rep_cost(self.rep_cost_base, level)
    }

    pub fn level(&self, level: u8) -> Option<&LevelSpec> {
        self.levels.get(usize::from(level).checked_sub(1)?)
    }

    pub fn parse(path: &str, text: &str) -> Result<Campaign> {
        let c: Campaign = serde_json::from_str(text).map_err(|e| schema(path, "", e.to_string()))?;
        c.check(path)?;
        Ok(c)
    }

    /// Structural rules that need no template catalog.
    fn check(&self, path: &str) -> Result<()> {
        if self.schema != 1 {
            return Err(schema(path, "schema", format!("unsupported schema {}", self.schema)));
        }
        if !CAMPAIGNS.contains(&self.id.as_str()) {
            return Err(schema(path, "id", format!("unknown campaign `{}`", self.id)));
        }
        if self.rep_cost_base == 0 {
            return Err(schema(path, "rep_cost_base", "must be positive".into()));
        }
        if self.levels.len() != usize::from(LEVEL_COUNT) {
            return Err(schema(path, "levels", format!("expected {LEVEL_COUNT} levels, found {}", self.levels.len())));
        }
        for (i, l) in self.levels.iter().enumerate() {
            let at = |field: &str| format!("levels[{i}].{field}");
            if usize::from(l.level) != i + 1 {
                return Err(schema(path, &at("level"), format!("expected level {}, found {}", i + 1, l.level)));
            }
            if l.required_solved_count == 0 {
                return Err(schema(path, &at("required_solved_count"), "must be at least 1".into()));
            }
            if l.pool.len() < 2 * l.required_solved_count as usize {
                return Err(schema(path, &at("pool"), "pool must hold twice the required count".into()));
            }
            let unique: BTreeSet<&String> = l.pool.iter().collect();
            if unique.len() != l.pool.len() {
                return Err(schema(path, &at("pool"), "duplicate template".into()));
            }
            for (k, lock) in l.locked.iter().enumerate() {
                if !l.pool.contains(&lock.template) {
                    return Err(schema(path, &at(&format!("locked[{k}]")), format!("`{}` is not in the pool", lock.template)));
                }
            }
            if i > 0 {
                let prev = &self.levels[i - 1];
                if l.coin_threshold < prev.coin_threshold || l.reputation_threshold < prev.reputation_threshold {
                    return Err(schema(path, &at("thresholds"), "thresholds must not decrease".into()));
                }
            }
        }
        for (i, w) in self.calendar.windows(2).enumerate() {
            if w[1].date <= w[0].date {
                return Err(schema(path, &format!("calendar[{}].date", i + 1), "dates must increase".into()));
            }
            if w[1].min_coins < w[0].min_coins {
                return Err(schema(path, &format!("calendar[{}].min_coins", i + 1), "thresholds must not decrease".into()));
            }
        }
        Ok(())
    }

    /// Pool entries exist at the right place and respect the level regime;
    /// every main template of the level is pooled.
    pub fn check_against(&self, library: &Library, taxonomy: &Taxonomy) -> Result<()> {
        let path = format!("campaigns/{}.json", self.id);
        for (i, l) in self.levels.iter().enumerate() {
            for (k, id) in l.pool.iter().enumerate() {
                let at = format!("levels[{i}].pool[{k}]");
                let t = library.get(id).ok_or_else(|| schema(&path, &at, format!("unknown template `{id}`")))?;
                if t.campaign != self.id || t.level != l.level {
                    return Err(schema(&path, &at, format!("`{id}` belongs to {} level {}", t.campaign, t.level)));
                }
                let ac = t.is_three_phase() || t.netlist.as_deref().is_some_and(has_ac);
                let tagged = t.outcomes.iter().any(|o| taxonomy.is_three_phase(&o.topic));
                let broken = match l.regime {
                    Regime::Dc => ac.then_some("uses AC in a DC level"),
                    Regime::Ac => (!ac).then_some("is DC in an AC level"),
                    Regime::ThreePhase => (!tagged).then_some("lacks a three-phase tag"),
                    Regime::Mixed => None,
                };
                if let Some(why) = broken {
                    return Err(schema(&path, &at, format!("`{id}` {why}")));
                }
            }
            for t in library.templates().iter().filter(|t| t.campaign == self.id && t.level == l.level) {
                if !l.pool.contains(&t.id) {
                    return Err(schema(&path, &format!("levels[{i}].pool"), format!("`{}` is missing", t.id)));
                }
            }
        }
        Ok(())
    }
}

fn has_ac(netlist: &str) -> bool {
    netlist.lines().any(|line| {
        let upper = line.split('#').next().unwrap_or_default().to_ascii_uppercase();
        upper.trim_start().starts_with(".AC") || upper.split_whitespace().any(|w| w == "AC")
    })
}

pub fn rep_cost(base: u64, level: u8) -> u64 {
    base << level.saturating_sub(1)
}

fn schema(path: &str, field: &str, message: String) -> GameError {
    let path = if field.is_empty() { path.to_string() } else { format!("{path}: {field}") };
    GameError::Schema { path, message }
}

fn sorted(mut campaigns: Vec<Campaign>) -> Result<Vec<Campaign>> {
    campaigns.sort_by_key(|c| CAMPAIGNS.iter().position(|id| *id == c.id));
    if let Some(w) = campaigns.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(schema(&format!("campaigns/{}.json", w[0].id), "id", "duplicate campaign".into()));
    }
    Ok(campaigns)
}

/// Every `*.json` under `dir`, in canonical campaign order.
pub fn load_campaigns(dir: &Path) -> Result<Vec<Campaign>> {
    let io = |e: std::io::Error| schema(&dir.display().to_string(), "", e.to_string());
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(io)?;
        out.push(Campaign::parse(&p.display().to_string(), &text)?);
    }
    sorted(out)
}

/// The four campaigns compiled into the binary.
pub fn shipped_campaigns() -> &'static [Campaign] {
    static CELL: std::sync::OnceLock<Vec<Campaign>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let all = SHIPPED.iter().map(|(p, t)| Campaign::parse(p, t)).collect::<Result<Vec<_>>>();
        sorted(all.expect("shipped campaigns are valid")).expect("shipped campaigns are distinct")
    })
}

pub fn find_campaign<'a>(campaigns: &'a [Campaign], id: &str) -> Result<&'a Campaign> {
    campaigns.iter().find(|c| c.id == id).ok_or_else(|| GameError::UnknownCampaign(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rep_cost_doubles() {
        assert_eq!((1..=5).map(|l| rep_cost(10, l)).collect::<Vec<_>>(), [10, 20, 40, 80, 160]);
    }

    #[test]
    fn ac_detection() {
        assert!(has_ac(".AC 50\nR1 1 0 1"));
        assert!(has_ac("V1 1 0 AC 1 0"));
        assert!(!has_ac("V1 1 0 DC 12 # not AC here\nR1 1 0 4"));
    }

    #[test]
    fn missing_level_is_a_schema_error() {
        let (path, text) = SHIPPED[0];
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["levels"].as_array_mut().unwrap().remove(3);
        let err = Campaign::parse(path, &v.to_string()).unwrap_err();
        assert!(matches!(&err, GameError::Schema { path, .. } if path.ends_with("levels")), "{err}");
    }
}
