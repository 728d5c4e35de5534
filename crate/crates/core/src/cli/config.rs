use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context as _};

/// Flat `key = value` defaults read from a TOML file.
#[derive(Debug, Clone, Default)]
pub struct Config {
    table: toml::Table,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let table: toml::Table = text.parse()?;
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table() || v.is_array()) {
            return Err(anyhow!("config key `{k}` must hold a single value"));
        }
        Ok(Self { table })
    }

    /// The raw config value of `key` as text, if present.
    pub fn get(&self, key: &str) -> Option<String> {
        self.table.get(key).map(|v| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    /// Flag value, else config value, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    /// Flag value, else config value.
    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|raw| raw.parse().map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}")))
            .transpose()
    }
}
