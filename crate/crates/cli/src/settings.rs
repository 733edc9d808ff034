//! Flat `key=value` settings: config files, flag overlays and typed lookup.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    /// Keys are normalized to lower case with `-` replaced by `_`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut s = Settings::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key=value, got {t:?}", lineno + 1)))?;
            s.set(k, v.trim());
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn key(k: &str) -> String {
        k.trim().to_ascii_lowercase().replace('-', "_")
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(Self::key(key), value.to_string());
    }

    /// Sets `key` when a flag was given; flags win over file values.
    pub fn overlay(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&Self::key(key)).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(&Self::key(key))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Typed value of `key`, or `default` (which is then recorded) when absent.
    pub fn value_or<T>(&mut self, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.get(key) {
            Some(raw) => raw.parse().map_err(|e| CliError::Usage(format!("{key}: cannot parse {raw:?}: {e}"))),
            None => {
                self.set(key, &default);
                Ok(default)
            }
        }
    }

    pub fn required<T>(&self, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.get(key).ok_or_else(|| CliError::Usage(format!("missing required setting --{}", key.replace('_', "-"))))?;
        raw.parse().map_err(|e| CliError::Usage(format!("{key}: cannot parse {raw:?}: {e}")))
    }

    /// Comma-separated list of integers.
    pub fn required_list(&self, key: &str) -> CliResult<Vec<usize>> {
        let raw = self.get(key).ok_or_else(|| CliError::Usage(format!("missing required setting --{}", key.replace('_', "-"))))?;
        parse_list(raw).map_err(|e| CliError::Usage(format!("{key}: {e}")))
    }
}

pub fn parse_list(raw: &str) -> Result<Vec<usize>, String> {
    raw.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad list entry {p:?} in {raw:?}")))
        .collect()
}

pub fn format_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
