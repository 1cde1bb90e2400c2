//! Deployment settings: one JSON file, each field overridable by a `CQ_`
//! environment variable (`CQ_STORAGE`, `CQ_BIND`, `CQ_DATA_DIR`,
//! `CQ_TOKEN_SECRET`, `CQ_TOKEN_TTL_HOURS`, `CQ_SNAPSHOT_EVERY`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PlatformError, Result};

pub const ENV_PREFIX: &str = "CQ_";
/// HMAC keys shorter than this are refused.
pub const MIN_SECRET_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Directory holding the event log and snapshots.
    pub storage: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Campaign and template data; the compiled-in data when absent.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    pub token_secret: String,
    #[serde(default = "default_ttl")]
    pub token_ttl_hours: i64,
    /// Appended records between snapshots.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_ttl() -> i64 {
    24 * 7
}

fn default_snapshot_every() -> u64 {
    1000
}

impl Config {
    /// File contents (if any) overlaid with `CQ_*` pairs from `env`.
    pub fn resolve(file: Option<&str>, env: impl IntoIterator<Item = (String, String)>) -> Result<Config> {
        let mut value = match file {
            Some(text) => serde_json::from_str::<serde_json::Value>(text).map_err(|e| PlatformError::Config(e.to_string()))?,
            None => serde_json::json!({}),
        };
        let object = value.as_object_mut().ok_or_else(|| PlatformError::Config("top level must be an object".into()))?;
        for (key, raw) in env {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            let field = name.to_ascii_lowercase();
            let parsed = match field.as_str() {
                "storage" | "bind" | "data_dir" | "token_secret" => serde_json::Value::String(raw),
                "token_ttl_hours" | "snapshot_every" => {
                    let n: i64 = raw.trim().parse().map_err(|_| PlatformError::Config(format!("{key}: not an integer: {raw}")))?;
                    serde_json::Value::from(n)
                }
                _ => continue,
            };
            object.insert(field, parsed);
        }
        let config: Config = serde_json::from_value(value).map_err(|e| PlatformError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Reads `path` when given and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| PlatformError::io(p.display(), e))?),
            None => None,
        };
        Config::resolve(text.as_deref(), std::env::vars())
    }

    fn check(&self) -> Result<()> {
        if self.token_secret.len() < MIN_SECRET_BYTES {
            return Err(PlatformError::Config(format!("token_secret needs at least {MIN_SECRET_BYTES} bytes")));
        }
        if self.token_ttl_hours <= 0 {
            return Err(PlatformError::Config("token_ttl_hours must be positive".into()));
        }
        if self.snapshot_every == 0 {
            return Err(PlatformError::Config("snapshot_every must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn env_overrides_file() {
        let file = r#"{"storage": "/var/cq", "token_secret": "0123456789abcdef", "bind": "0.0.0.0:1"}"#;
        let c = Config::resolve(Some(file), env(&[("CQ_BIND", "127.0.0.1:9"), ("CQ_SNAPSHOT_EVERY", "5"), ("HOME", "/x")])).unwrap();
        assert_eq!(c.bind, "127.0.0.1:9");
        assert_eq!(c.snapshot_every, 5);
        assert_eq!(c.storage, PathBuf::from("/var/cq"));
        assert_eq!(c.data_dir, None);
    }

    #[test]
    fn env_alone_is_enough() {
        let c = Config::resolve(None, env(&[("CQ_STORAGE", "s"), ("CQ_TOKEN_SECRET", "a-long-enough-secret")])).unwrap();
        assert_eq!(c.token_ttl_hours, 24 * 7);
    }

    #[test]
    fn short_secret_and_unknown_fields_are_rejected() {
        assert!(Config::resolve(Some(r#"{"storage": "s", "token_secret": "short"}"#), []).is_err());
        assert!(Config::resolve(Some(r#"{"storage": "s", "token_secret": "0123456789abcdef", "port": 1}"#), []).is_err());
        assert!(Config::resolve(None, env(&[("CQ_STORAGE", "s"), ("CQ_TOKEN_SECRET", "0123456789abcdef"), ("CQ_TOKEN_TTL_HOURS", "x")])).is_err());
    }
}
