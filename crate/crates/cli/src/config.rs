use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Every key any command understands. Anything else is rejected at parse
/// time.
pub const KNOWN_KEYS: &[&str] = &[
    "problem",
    "out",
    "seed",
    // operator
    "size",
    "num_lines",
    "coils",
    "noise",
    // prior
    "prior",
    "weight",
    "factor",
    "variance",
    "mean",
    "lambda",
    "tv_inner_iters",
    "tv_tolerance",
    "tv_accelerated",
    // mismatch
    "epsilon",
    "mode",
    // solver
    "gamma",
    "tau",
    "sigma",
    "iterations",
    "tolerance",
    "stride",
    // sweeps and studies
    "taus",
    "sigmas",
    "epsilons",
    "seeds",
    "slack",
    "test_points",
    "length",
    // 1-D oracle
    "delta",
    "grid_points",
    "grid_min",
    "grid_max",
    "domain_min",
    "domain_max",
    "nodes",
];

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries, resolved: BTreeMap::new() })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Command-line values win over the file.
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        raw.parse()
            .map_err(|e| CliError::Config(format!("key `{key}`: cannot parse `{raw}`: {e}")))
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self
            .entries
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?
            .clone();
        let value = Self::parse_value(key, &raw)?;
        self.resolved.insert(key.to_string(), raw);
        Ok(value)
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let value = match self.entries.get(key) {
            Some(raw) => Self::parse_value(key, raw)?,
            None => default,
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Present-or-absent value; absent keys are echoed as `auto`.
    pub fn maybe<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.entries.get(key).cloned() {
            Some(raw) => {
                let value = Self::parse_value(key, &raw)?;
                self.resolved.insert(key.to_string(), raw);
                Ok(Some(value))
            }
            None => {
                self.resolved.insert(key.to_string(), "auto".into());
                Ok(None)
            }
        }
    }

    /// Comma-separated list of numbers.
    pub fn list(&mut self, key: &str, default: Option<&[f64]>) -> Result<Vec<f64>, CliError> {
        let values: Vec<f64> = match (self.entries.get(key), default) {
            (Some(raw), _) => raw
                .split(',')
                .map(|s| Self::parse_value::<f64>(key, s.trim()))
                .collect::<Result<_, _>>()?,
            (None, Some(d)) => d.to_vec(),
            (None, None) => return Err(CliError::Config(format!("missing required key `{key}`"))),
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("key `{key}` must list at least one value")));
        }
        let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.resolved.insert(key.to_string(), text.join(", "));
        Ok(values)
    }

    /// Keys given in the file that the command never read.
    pub fn unused(&self) -> Vec<&str> {
        self.entries
            .keys()
            .filter(|k| !self.resolved.contains_key(*k))
            .map(String::as_str)
            .collect()
    }

    /// Every key the command read, with its final value, in config syntax.
    pub fn render_resolved(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::write(dir.join("config.resolved"), self.render_resolved()).map_err(sdred::Error::from)?;
        Ok(())
    }
}
