//! Line-oriented configuration: `[section]` headers, `key = value` pairs,
//! `#` comment lines. Parse errors carry 1-based line numbers.

use std::collections::BTreeMap;

use hypertest_core::rat::{rat_from_text, to_f64};
use hypertest_core::Rat;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut sections: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(lineno, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(CliError::config(lineno, "empty section name"));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(lineno, "expected `key = value` or `[section]`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::config(lineno, "empty key"));
            }
            let entry = sections.entry(current.clone()).or_default();
            if entry.insert(key.to_string(), (value.trim().to_string(), lineno)).is_some() {
                return Err(CliError::config(
                    lineno,
                    format!("duplicate key `{key}` in section `[{current}]`"),
                ));
            }
        }
        Ok(Config { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        let (value, _) = self.sections.get(section)?.get(key)?;
        if value.is_empty() {
            None
        } else {
            Some(value.as_str())
        }
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|&(_, line)| line)
            .unwrap_or(0)
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        self.parse_or(section, key, default)
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, CliError> {
        self.parse_or(section, key, default)
    }

    /// Accepts both decimal and `p/q` notation.
    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .or_else(|| rat_from_text(v).map(|r| to_f64(&r)))
                .ok_or_else(|| {
                    CliError::config(
                        self.line_of(section, key),
                        format!("cannot parse `{v}` as a number for {section}.{key}"),
                    )
                }),
        }
    }

    pub fn rat_or(&self, section: &str, key: &str, default: Rat) -> Result<Rat, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => rat_from_text(v).ok_or_else(|| {
                CliError::config(
                    self.line_of(section, key),
                    format!("cannot parse `{v}` as a rational for {section}.{key}"),
                )
            }),
        }
    }

    /// Whitespace-separated list value, empty when the key is absent.
    pub fn paths(&self, section: &str, key: &str) -> Vec<String> {
        self.get(section, key)
            .map(|v| v.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default()
    }

    fn parse_or<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::config(
                    self.line_of(section, key),
                    format!("cannot parse `{v}` for {section}.{key}"),
                )
            }),
        }
    }
}
