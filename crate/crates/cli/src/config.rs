//! Plain-text `key = value` configuration files. Flags override file values,
//! which override built-in defaults.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context};

use crate::{data, usage, CliResult};

const KEYS: &[&str] = &[
    "method",
    "window",
    "rmax",
    "tau",
    "tau_rel",
    "sigma",
    "max_iterations",
    "grid_steps",
    "parallel",
    "warm_start",
    "require_certificate",
    "undistort",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    /// Loads `path`, or an empty configuration when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(data)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(anyhow!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('-', "_").to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(usage(anyhow!("config line {}: unknown key `{key}`", i + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| usage(anyhow!("config key `{key}`: cannot parse {v:?}")))
            })
            .transpose()
    }

    /// Flag value: set on the command line, or `true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }

    /// `flag`, else the file's value for `key`, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let c = ConfigFile::parse("# solver\nrmax = 5\ntau-rel=0.001\nparallel = true\n").unwrap();
        assert_eq!(c.pick(Some(2.0), "rmax", 20.0).unwrap(), 2.0);
        assert_eq!(c.pick(None, "rmax", 20.0).unwrap(), 5.0);
        assert_eq!(c.pick(None, "tau_rel", 1e-2).unwrap(), 1e-3);
        assert_eq!(c.pick(None, "sigma", 1.0).unwrap(), 1.0);
        assert!(c.switch(false, "parallel").unwrap());
        assert!(!c.switch(false, "warm_start").unwrap());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ConfigFile::parse("speed = 3").is_err());
        assert!(ConfigFile::parse("rmax 3").is_err());
        let c = ConfigFile::parse("rmax = fast").unwrap();
        assert!(c.pick::<f64>(None, "rmax", 1.0).is_err());
    }
}
