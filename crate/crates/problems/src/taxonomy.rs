//! Closed list of course topics and Bloom levels used to tag templates.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ProblemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bloom {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl Bloom {
    pub const ALL: [Bloom; 6] =
        [Bloom::Remember, Bloom::Understand, Bloom::Apply, Bloom::Analyze, Bloom::Evaluate, Bloom::Create];

    pub fn as_str(self) -> &'static str {
        match self {
            Bloom::Remember => "remember",
            Bloom::Understand => "understand",
            Bloom::Apply => "apply",
            Bloom::Analyze => "analyze",
            Bloom::Evaluate => "evaluate",
            Bloom::Create => "create",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeTag {
    pub bloom: Bloom,
    pub topic: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub block: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub schema: u32,
    pub blocks: Vec<String>,
    pub topics: Vec<Topic>,
}

/// Block holding the three-phase topics.
pub const THREE_PHASE_BLOCK: &str = "three-phase";

const SHIPPED: &str = include_str!("../../../data/taxonomy.json");

impl Taxonomy {
    pub fn parse(text: &str) -> Result<Self> {
        let t: Taxonomy =
            serde_json::from_str(text).map_err(|e| ProblemError::Schema { path: "taxonomy".into(), message: e.to_string() })?;
        if t.schema != 1 {
            return Err(ProblemError::Schema { path: "taxonomy.schema".into(), message: format!("unsupported schema {}", t.schema) });
        }
        for (i, topic) in t.topics.iter().enumerate() {
            if !t.blocks.contains(&topic.block) {
                return Err(ProblemError::Schema {
                    path: format!("taxonomy.topics[{i}].block"),
                    message: format!("unknown block `{}`", topic.block),
                });
            }
            if t.topics[..i].iter().any(|o| o.id == topic.id) {
                return Err(ProblemError::Schema { path: format!("taxonomy.topics[{i}].id"), message: format!("duplicate topic `{}`", topic.id) });
            }
        }
        Ok(t)
    }

    pub fn shipped() -> &'static Taxonomy {
        static CELL: OnceLock<Taxonomy> = OnceLock::new();
        CELL.get_or_init(|| Taxonomy::parse(SHIPPED).expect("shipped taxonomy is valid"))
    }

    pub fn topic(&self, id: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.topic(id).is_some()
    }

    pub fn is_three_phase(&self, id: &str) -> bool {
        self.topic(id).is_some_and(|t| t.block == THREE_PHASE_BLOCK)
    }
}
