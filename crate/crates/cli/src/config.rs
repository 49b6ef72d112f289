//! `key = value` configuration files and flag resolution.
//!
//! A value given on the command line wins over the config file, which wins
//! over the built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys a config file may set; each matches a long flag name.
pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "n-range",
    "delta",
    "families",
    "error-mode",
    "estimate-max-n",
    "k3-heat-lb",
    "k4-heat-lb",
    "k3-heat-ub",
    "k3-max-lb",
    "k3-max-ub",
    "format",
    "log-x",
    "player",
    "adversary",
    "trials",
    "seed",
    "cap",
    "radius",
    "tol",
    "suite",
    "samples",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    i + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag, then config file, then nothing.
    pub fn opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn required<T>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| CliError::Missing(format!("--{key}")))
    }

    /// Boolean switch: set by the flag or by `key = true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.opt::<bool>(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let c =
            Config::parse("delta = 0.1\n# comment\ntrials=5 # trailing\nn_range = 2:4\n").unwrap();
        assert_eq!(c.or::<f64>(None, "delta", 0.5).unwrap(), 0.1);
        assert_eq!(c.or(Some(0.2), "delta", 0.5).unwrap(), 0.2);
        assert_eq!(c.or::<u64>(None, "seed", 9).unwrap(), 9);
        assert_eq!(c.or::<u64>(None, "trials", 1).unwrap(), 5);
        assert_eq!(c.opt::<String>(None, "n-range").unwrap().unwrap(), "2:4");
        assert!(matches!(
            c.required::<usize>(None, "n"),
            Err(CliError::Missing(_))
        ));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Config::parse("delta 0.1").is_err());
        assert!(Config::parse("colour = red").is_err());
        let c = Config::parse("delta = abc").unwrap();
        assert!(c.opt::<f64>(None, "delta").is_err());
    }
}
