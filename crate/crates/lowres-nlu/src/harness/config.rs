use std::collections::BTreeMap;
use std::path::Path;

use super::HarnessError;

/// Key/value run configuration: one `key = value` per line, `#` comments.
/// Command-line `--set key=value` pairs override file entries, and the
/// `LOWRES_NLU_SEED` environment variable overrides any configured seed.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

pub const SEED_ENV_VAR: &str = "LOWRES_NLU_SEED";

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Format {
                    line: lineno + 1,
                    message: format!("expected `key = value`, found {line:?}"),
                });
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(RunConfig { values })
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.into(), e))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides from the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), HarnessError> {
        for (i, o) in overrides.iter().enumerate() {
            let Some((key, value)) = o.split_once('=') else {
                return Err(HarnessError::Format {
                    line: i + 1,
                    message: format!("override {o:?} is not key=value"),
                });
            };
            self.values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, HarnessError> {
        self.typed(key, default)
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, HarnessError> {
        self.typed(key, default)
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, HarnessError> {
        self.typed(key, default)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| HarnessError::Format {
                line: 0,
                message: format!("config key {key} has unparseable value {raw:?}"),
            }),
        }
    }

    /// Seed resolution order: environment variable, then config file, then
    /// the provided default.
    pub fn seed(&self, default: u64) -> Result<u64, HarnessError> {
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            return raw.parse().map_err(|_| HarnessError::Format {
                line: 0,
                message: format!("{SEED_ENV_VAR} value {raw:?} is not an integer"),
            });
        }
        self.typed("seed", default)
    }
}
