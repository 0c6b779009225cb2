use std::path::{Path, PathBuf};

use pupilclean_core::series::DEFAULT_CACHE_BYTES;
use pupilclean_core::ColumnMapping;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Service settings, read from a TOML file and overridden by `PUPILCLEAN_*`
/// environment variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub storage_root: PathBuf,
    pub cache_budget_bytes: usize,
    /// Worker count; derived from the host's cores when absent.
    pub workers: Option<usize>,
    pub max_upload_bytes: usize,
    /// Rate assumed for uploaded TSV files that do not state one; inferred
    /// from the timestamps when absent.
    pub default_sample_rate_hz: Option<f64>,
    pub mapping: ColumnMapping,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            storage_root: PathBuf::from("pupilclean-data"),
            cache_budget_bytes: DEFAULT_CACHE_BYTES,
            workers: None,
            max_upload_bytes: 1 << 30,
            default_sample_rate_hz: None,
            mapping: ColumnMapping::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid value {value:?} for {var}")]
    Env { var: &'static str, value: String },
}

pub const ENV_LISTEN: &str = "PUPILCLEAN_LISTEN";
pub const ENV_STORAGE_ROOT: &str = "PUPILCLEAN_STORAGE_ROOT";
pub const ENV_CACHE_BYTES: &str = "PUPILCLEAN_CACHE_BYTES";
pub const ENV_WORKERS: &str = "PUPILCLEAN_WORKERS";
pub const ENV_SAMPLE_RATE: &str = "PUPILCLEAN_SAMPLE_RATE_HZ";

impl ServiceConfig {
    /// Reads `path` (defaults when absent) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                toml::from_str(&text).map_err(|source| ConfigError::Parse {
                    path: path.to_path_buf(),
                    source,
                })?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(|var| std::env::var(var).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env { var, value })
        }
        if let Some(v) = lookup(ENV_LISTEN) {
            self.listen = v;
        }
        if let Some(v) = lookup(ENV_STORAGE_ROOT) {
            self.storage_root = PathBuf::from(v);
        }
        if let Some(v) = lookup(ENV_CACHE_BYTES) {
            self.cache_budget_bytes = parse(ENV_CACHE_BYTES, v)?;
        }
        if let Some(v) = lookup(ENV_WORKERS) {
            let n: usize = parse(ENV_WORKERS, v.clone())?;
            if n == 0 {
                return Err(ConfigError::Env { var: ENV_WORKERS, value: v });
            }
            self.workers = Some(n);
        }
        if let Some(v) = lookup(ENV_SAMPLE_RATE) {
            let rate: f64 = parse(ENV_SAMPLE_RATE, v.clone())?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(ConfigError::Env { var: ENV_SAMPLE_RATE, value: v });
            }
            self.default_sample_rate_hz = Some(rate);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn file_then_env() {
        let mut config: ServiceConfig = toml::from_str(
            r#"
            listen = "0.0.0.0:9000"
            storage_root = "/srv/pupil"
            workers = 3

            [mapping]
            timestamp_unit = "milliseconds"
            "#,
        )
        .unwrap();
        assert_eq!(config.cache_budget_bytes, DEFAULT_CACHE_BYTES);
        assert_eq!(config.mapping.timestamp_column, "EyeTrackerTimestamp");
        let env: HashMap<&str, &str> = [(ENV_WORKERS, "5"), (ENV_CACHE_BYTES, "1024")].into();
        config.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(config.workers, Some(5));
        assert_eq!(config.cache_budget_bytes, 1024);
        assert_eq!(config.listen, "0.0.0.0:9000");
    }

    #[test]
    fn bad_env_values_are_errors() {
        let mut config = ServiceConfig::default();
        assert!(config.apply_env(|k| (k == ENV_WORKERS).then(|| "0".into())).is_err());
        assert!(config.apply_env(|k| (k == ENV_CACHE_BYTES).then(|| "lots".into())).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ServiceConfig>("listn = \"x\"").is_err());
    }
}
