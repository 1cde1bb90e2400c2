//! Templates, value tables, taxonomy and campaigns, checked against each
//! other. A data directory mirrors the repository's `data/` layout.

use std::path::Path;

use cq_game::{find_campaign, load_campaigns, shipped_campaigns, Campaign};
use cq_problems::{instantiate_with, Library, ProblemInstance, ProblemTemplate, Tables, Taxonomy};

use crate::error::{PlatformError, Result};

#[derive(Debug, Clone)]
pub struct Catalog {
    pub library: Library,
    pub tables: Tables,
    pub taxonomy: Taxonomy,
    pub campaigns: Vec<Campaign>,
}

impl Catalog {
    pub fn shipped() -> Result<Catalog> {
        let catalog = Catalog {
            library: Library::shipped().clone(),
            tables: Tables::shipped().clone(),
            taxonomy: Taxonomy::shipped().clone(),
            campaigns: shipped_campaigns().to_vec(),
        };
        catalog.check()?;
        Ok(catalog)
    }

    /// Reads `taxonomy.json`, `catalogs.json`, `templates/` and `campaigns/`.
    pub fn load(dir: &Path) -> Result<Catalog> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| PlatformError::DataLoad(format!("{}: {e}", p.display())))
        };
        let data = |e: &dyn std::fmt::Display| PlatformError::DataLoad(e.to_string());
        let taxonomy = Taxonomy::parse(&read("taxonomy.json")?).map_err(|e| data(&e))?;
        let tables = Tables::parse(&read("catalogs.json")?).map_err(|e| data(&e))?;
        let library = Library::load_dir(&dir.join("templates"), &taxonomy, &tables).map_err(|e| data(&e))?;
        let campaigns = load_campaigns(&dir.join("campaigns")).map_err(|e| data(&e))?;
        let catalog = Catalog { library, tables, taxonomy, campaigns };
        catalog.check()?;
        Ok(catalog)
    }

    pub fn from_option(dir: Option<&Path>) -> Result<Catalog> {
        match dir {
            Some(d) => Catalog::load(d),
            None => Catalog::shipped(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.campaigns.is_empty() {
            return Err(PlatformError::DataLoad("no campaigns".into()));
        }
        for c in &self.campaigns {
            c.check_against(&self.library, &self.taxonomy).map_err(|e| PlatformError::DataLoad(e.to_string()))?;
        }
        Ok(())
    }

    pub fn campaign(&self, id: &str) -> Result<&Campaign> {
        Ok(find_campaign(&self.campaigns, id)?)
    }

    pub fn template(&self, id: &str) -> Result<&ProblemTemplate> {
        self.library.get(id).ok_or_else(|| PlatformError::Problem(cq_problems::ProblemError::UnknownTemplate(id.into())))
    }

    pub fn instantiate(&self, template_id: &str, seed: u64) -> Result<ProblemInstance> {
        Ok(instantiate_with(self.template(template_id)?, seed, &self.tables)?)
    }
}
