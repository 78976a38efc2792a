//! Key-value defaults file.
//!
//! A config file supplies defaults for any long option of any subcommand;
//! values given on the command line always win. The format is one
//! `key = value` pair per line, `#` starts a comment, blank lines are
//! ignored. Keys use the option's long name (e.g. `sample-rate`).

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key any subcommand consults. Unknown keys are rejected so that a
/// typo cannot silently fall back to a built-in default.
const KNOWN_KEYS: &[&str] = &[
    "side",
    "scheme",
    "alpha",
    "alphas",
    "steps",
    "input",
    "probe",
    "output",
    "audio",
    "sample-rate",
    "direction",
    "points",
    "max-omega",
    "fft",
    "prominence",
    "policy",
];

/// Parsed defaults, ready to back fill options the command line left unset.
#[derive(Debug, Default)]
pub struct Settings {
    values: HashMap<String, String>,
}

impl Settings {
    /// Loads and validates a config file.
    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    /// Returns the parsed value for `key`, if the file set one.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::Config(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }

    /// Command-line value if present, else the config value, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Command-line value if present, else the config value, else `None`.
    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}
