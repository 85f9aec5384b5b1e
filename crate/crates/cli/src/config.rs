//! Flat `key = value` config files with `#` comments. Command-line flags
//! override file values; defaults apply last.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    map: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "config {} line {}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { map })
    }

    /// Flag value wins; else the config-file value; else the default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.resolve_opt(key, flag)? {
            Some(v) => Ok(v),
            None => Ok(default),
        }
    }

    pub fn resolve_opt<T: FromStr + Clone>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.map.get(key) {
            Some(s) => match s.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key `{key}`: cannot parse `{s}`: {e}"),
            },
            None => Ok(None),
        }
    }

    /// Boolean switch: true if the flag is set, else the config value.
    pub fn resolve_switch(&self, key: &str, flag: bool) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.map.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => bail!("config key `{key}`: expected a boolean, got `{other}`"),
        }
    }
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid integer `{t}` in list `{s}`"))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number `{t}` in list `{s}`"))
        })
        .collect()
}
