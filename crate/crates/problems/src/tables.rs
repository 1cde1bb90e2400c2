//! Named value tables that `catalog` parameters draw from (standard
//! resistor series, appliance ratings, cable sections).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ProblemError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub schema: u32,
    pub tables: BTreeMap<String, Vec<String>>,
}

impl Tables {
    pub fn parse(text: &str) -> Result<Self> {
        let tables: Tables = serde_json::from_str(text)
            .map_err(|e| ProblemError::Schema { path: "catalogs.json".into(), message: e.to_string() })?;
        if tables.schema != 1 {
            return Err(ProblemError::Schema { path: "catalogs.json".into(), message: format!("schema {} != 1", tables.schema) });
        }
        Ok(tables)
    }

    pub fn shipped() -> &'static Tables {
        static SHIPPED: OnceLock<Tables> = OnceLock::new();
        SHIPPED.get_or_init(|| Tables::parse(include_str!("../../../data/catalogs.json")).expect("shipped tables parse"))
    }

    pub fn get(&self, name: &str) -> Option<&[String]> {
        self.tables.get(name).map(Vec::as_slice)
    }
}
