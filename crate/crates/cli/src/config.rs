//! `key = value` config files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

use crate::Usage;

/// Keys a config file may set; they match the long flag names.
const KEYS: &[&str] = &[
    "data",
    "test",
    "difficulty-csv",
    "benchmark",
    "test-per-class",
    "seed",
    "seeds",
    "out",
    "strategy",
    "alpha",
    "gamma",
    "k",
    "batch-size",
    "iterations",
    "window",
    "lr",
    "eval-every",
    "hidden",
    "svg",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).map_err(|e| Usage(format!("{}: {}", path.display(), e.0)).into())
    }

    pub fn parse(text: &str) -> Result<Self, Usage> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Usage(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(Usage(format!("line {}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// `flag` if given, else the parsed config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Usage>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Usage(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, Usage> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}
