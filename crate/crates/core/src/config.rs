//! Flat `section.key = value` configuration text.
//!
//! ```text
//! # comment
//! model.alpha = 1.5
//! sim.record_times = 1 2 4
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::StableParams;
use crate::measures::FiniteMeasure;
use crate::sim::{Engine, SimulationConfig, DEFAULT_MAX_PARTICLES};

/// Keys understood by [`SimulationConfig::from_config`].
pub const SIMULATION_KEYS: &[&str] = &[
    "model.alpha",
    "model.dim",
    "model.beta",
    "sim.scale",
    "sim.initial",
    "sim.horizon",
    "sim.record_times",
    "sim.seed",
    "sim.max_particles",
    "sim.engine",
    "sim.spatial_horizon",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

fn split_assignment(line: &str) -> Result<(String, String)> {
    let (key, value) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected 'section.key = value', got '{line}'")))?;
    let key = key.trim();
    let valid = !key.is_empty()
        && key
            .split('.')
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    if !valid {
        return Err(Error::Config(format!("invalid key '{key}'")));
    }
    Ok((key.to_string(), value.trim().to_string()))
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses config text. Blank lines and lines starting with `#` are
    /// skipped; a key may appear only once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                split_assignment(line).map_err(|e| Error::Config(format!("line {}: {e}", number + 1)))?;
            if map.entries.contains_key(&key) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", number + 1)));
            }
            map.entries.insert(key, value);
        }
        Ok(map)
    }

    /// Reads and parses a file; relative paths inside the config resolve
    /// against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut map = Self::parse(&text)?;
        map.base_dir = path.parent().map(Path::to_path_buf);
        Ok(map)
    }

    /// Applies a `key=value` override, replacing any existing value.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = split_assignment(assignment)?;
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("{key} = '{v}': {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// A list of numbers separated by whitespace or commas.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| Error::Config(format!("{key}: '{s}': {e}"))))
                    .collect()
            })
            .transpose()
    }

    /// Rejects keys outside `known`, which catches misspelled settings.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(key) => Err(Error::Config(format!("unknown key '{key}'"))),
            None => Ok(()),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `key = value` lines in key order.
    pub fn to_text(&self) -> String {
        self.entries().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl StableParams {
    /// From `model.alpha` (required) and `model.dim` (default 1).
    pub fn from_config(config: &ConfigMap) -> Result<Self> {
        let alpha: f64 = config.require("model.alpha")?;
        let dim: usize = config.parsed_or("model.dim", 1)?;
        StableParams::new(alpha, dim).map_err(|e| Error::Config(e.to_string()))
    }
}

impl SimulationConfig {
    /// From the `model.*` and `sim.*` keys. `model.beta`, `sim.scale` and
    /// `sim.horizon` are required; the initial measure defaults to `δ_0`
    /// and the record times to the horizon.
    pub fn from_config(config: &ConfigMap) -> Result<Self> {
        let params = StableParams::from_config(config)?;
        let beta: f64 = config.require("model.beta")?;
        let scale: u64 = config.require("sim.scale")?;
        let horizon: f64 = config.require("sim.horizon")?;
        let initial = FiniteMeasure::parse(config.get("sim.initial").unwrap_or("delta"), params.dim())
            .map_err(|e| Error::Config(format!("sim.initial: {e}")))?;
        let record_times = config.list("sim.record_times")?.unwrap_or_else(|| vec![horizon]);
        Ok(SimulationConfig::new(params, beta, scale, initial, horizon)
            .with_record_times(record_times)
            .with_seed(config.parsed_or("sim.seed", 0)?)
            .with_max_particles(config.parsed_or("sim.max_particles", DEFAULT_MAX_PARTICLES)?)
            .with_engine(config.parsed_or("sim.engine", Engine::default())?)
            .with_spatial_horizon(config.parsed("sim.spatial_horizon")?))
    }
}
