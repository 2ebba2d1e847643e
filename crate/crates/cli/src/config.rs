//! `key = value` configuration files. Keys are the long flag names; `_` and
//! `-` are interchangeable. Command-line flags always win over the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a configuration file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    // flow
    "lambda",
    "theta",
    "tau",
    "epsilon",
    "scales",
    "warps",
    "outer-iters",
    "inner-iters",
    "zoom",
    "median-radius",
    "remove-mean",
    // pooling
    "method",
    "feature-mode",
    "flow-threshold",
    "rank-lambda",
    "rank-step",
    "rank-epochs",
    "rank-tol",
    // lighting
    "delta",
    "ramp-len",
    "ramp-start",
    "lighting",
    // synthetic clips
    "fall",
    "adl",
    "width",
    "height",
    "frames",
    "noise-sigma",
    "actor-width",
    "actor-height",
    // classifier
    "epochs",
    "rate",
    "train-fraction",
    "threshold",
    "clips",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Input(format!(
                    "config line {}: unknown key '{key}'",
                    n + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value if given, else the file's value, else `default`.
    pub fn pick<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.lookup(key, flag)?.unwrap_or(default))
    }

    pub fn lookup<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Input(format!("config key '{key}': {e}"))),
        }
    }
}
