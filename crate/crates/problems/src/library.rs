//! The template catalog: one JSON document per campaign.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ProblemError, Result};
use crate::tables::Tables;
use crate::taxonomy::{Bloom, Taxonomy};
use crate::template::{ProblemTemplate, CAMPAIGNS, LEVELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignFile {
    pub schema: u32,
    pub campaign: String,
    pub templates: Vec<ProblemTemplate>,
}

const SHIPPED: [(&str, &str); 4] = [
    ("appliances.json", include_str!("../../../data/templates/appliances.json")),
    ("power-plant.json", include_str!("../../../data/templates/power-plant.json")),
    ("households.json", include_str!("../../../data/templates/households.json")),
    ("mars.json", include_str!("../../../data/templates/mars.json")),
];

/// Validated templates sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    templates: Vec<ProblemTemplate>,
}

impl Library {
    pub fn shipped() -> &'static Library {
        static LIBRARY: OnceLock<Library> = OnceLock::new();
        LIBRARY.get_or_init(|| {
            let files = SHIPPED.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect();
            Library::from_files(files, Taxonomy::shipped(), Tables::shipped()).expect("shipped templates are valid")
        })
    }

    /// Loads every `*.json` under `dir`.
    pub fn load_dir(dir: &Path, taxonomy: &Taxonomy, tables: &Tables) -> Result<Library> {
        let schema = |message: String| ProblemError::Schema { path: dir.display().to_string(), message };
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| schema(e.to_string()))? {
            let path = entry.map_err(|e| schema(e.to_string()))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let text = std::fs::read_to_string(&path).map_err(|e| schema(e.to_string()))?;
                files.push((path.display().to_string(), text));
            }
        }
        files.sort();
        Library::from_files(files, taxonomy, tables)
    }

    pub fn from_files(files: Vec<(String, String)>, taxonomy: &Taxonomy, tables: &Tables) -> Result<Library> {
        let mut templates = Vec::new();
        for (path, text) in files {
            let schema = |message: String| ProblemError::Schema { path: path.clone(), message };
            let file: CampaignFile = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
            if file.schema != 1 {
                return Err(schema(format!("schema {} != 1", file.schema)));
            }
            for t in file.templates {
                if t.campaign != file.campaign {
                    return Err(schema(format!("template `{}` is filed under `{}`", t.id, file.campaign)));
                }
                t.validate(taxonomy, tables)?;
                templates.push(t);
            }
        }
        templates.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = templates.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ProblemError::InvalidTemplate { template: w[0].id.clone(), message: "duplicate id".into() });
        }
        Ok(Library { templates })
    }

    pub fn templates(&self) -> &[ProblemTemplate] {
        &self.templates
    }

    pub fn get(&self, id: &str) -> Option<&ProblemTemplate> {
        self.templates.binary_search_by(|t| t.id.as_str().cmp(id)).ok().map(|i| &self.templates[i])
    }
}

/// Optional outcome filter; a template matches when one of its tags
/// satisfies every field given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TagFilter {
    #[serde(default)]
    pub bloom: Option<Bloom>,
    #[serde(default)]
    pub topic: Option<String>,
}

impl TagFilter {
    pub fn matches(&self, template: &ProblemTemplate) -> bool {
        template.outcomes.iter().any(|tag| {
            self.bloom.is_none_or(|b| b == tag.bloom) && self.topic.as_ref().is_none_or(|t| t == &tag.topic)
        })
    }
}

pub fn filter_templates<'a>(
    library: &'a Library,
    campaign: &str,
    level: u8,
    filter: Option<&TagFilter>,
) -> Result<Vec<&'a ProblemTemplate>> {
    if !CAMPAIGNS.contains(&campaign) {
        return Err(ProblemError::UnknownCampaign(campaign.to_string()));
    }
    if !LEVELS.contains(&level) {
        return Err(ProblemError::UnknownLevel(level));
    }
    Ok(library
        .templates()
        .iter()
        .filter(|t| t.campaign == campaign && t.level == level)
        .filter(|t| filter.is_none_or(|f| f.matches(t)))
        .collect())
}
