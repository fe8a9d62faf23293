//! Flat key=value configuration files.
//!
//! A config file supplies defaults for the flags of the invoked command:
//! one `key=value` per line, keys spelled like the long flag without the
//! leading dashes. Blank lines and `#` comments are ignored. Flags given on
//! the command line win over the file, and any key the invoked command does
//! not accept is rejected.

use procflow::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

pub struct Cfg {
    map: BTreeMap<String, String>,
    used: BTreeSet<String>,
    declared: BTreeSet<&'static str>,
}

impl Cfg {
    pub fn empty() -> Cfg {
        Cfg {
            map: BTreeMap::new(),
            used: BTreeSet::new(),
            declared: BTreeSet::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Cfg> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: expected key=value, got {line:?}",
                    i + 1
                )));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: empty key",
                    i + 1
                )));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: duplicate key {key:?}",
                    i + 1
                )));
            }
        }
        Ok(Cfg {
            map,
            used: BTreeSet::new(),
            declared: BTreeSet::new(),
        })
    }

    /// Reject file keys outside the invoked command's flag set. Commands call
    /// this before doing any work so a misspelled key cannot leave partial
    /// output behind.
    pub fn declare(&mut self, keys: &[&'static str]) -> Result<()> {
        self.declared = keys.iter().copied().collect();
        for key in self.map.keys() {
            if !self.declared.contains(key.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "config key {key:?} is not accepted by this command"
                )));
            }
        }
        Ok(())
    }

    /// Mark `key` as accepted by this command and return the file's value.
    fn lookup(&mut self, key: &str) -> Option<String> {
        debug_assert!(
            self.declared.is_empty() || self.declared.contains(key),
            "resolver key {key:?} missing from the command's declared set"
        );
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    /// Reject any file key no resolver asked about.
    pub fn finish(&self) -> Result<()> {
        for key in self.map.keys() {
            if !self.used.contains(key) {
                return Err(Error::InvalidArgument(format!(
                    "config key {key:?} is not accepted by this command"
                )));
            }
        }
        Ok(())
    }
}

fn bad(key: &str, raw: &str, expect: &str) -> Error {
    Error::InvalidArgument(format!("--{key}: expected {expect}, got {raw:?}"))
}

pub fn missing(key: &str) -> Error {
    Error::InvalidArgument(format!("missing required flag --{key}"))
}

/// Flag value if given, else the config file's, else None.
pub fn raw(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Option<String> {
    let file = cfg.lookup(key);
    flag.or(file)
}

pub fn str_or(cfg: &mut Cfg, key: &str, flag: Option<String>, default: &str) -> String {
    raw(cfg, key, flag).unwrap_or_else(|| default.to_string())
}

pub fn str_req(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Result<String> {
    raw(cfg, key, flag).ok_or_else(|| missing(key))
}

pub fn num_opt<T: FromStr>(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Result<Option<T>>
where
    T::Err: Display,
{
    match raw(cfg, key, flag) {
        None => Ok(None),
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|_| bad(key, &s, "a number")),
    }
}

pub fn num_or<T: FromStr>(cfg: &mut Cfg, key: &str, flag: Option<String>, default: T) -> Result<T>
where
    T::Err: Display,
{
    Ok(num_opt(cfg, key, flag)?.unwrap_or(default))
}

pub fn num_req<T: FromStr>(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Result<T>
where
    T::Err: Display,
{
    num_opt(cfg, key, flag)?.ok_or_else(|| missing(key))
}

pub fn bool_or(cfg: &mut Cfg, key: &str, flag: Option<String>, default: bool) -> Result<bool> {
    match raw(cfg, key, flag) {
        None => Ok(default),
        Some(s) => match s.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad(key, &s, "true or false")),
        },
    }
}

/// Comma-separated list of numbers; required and nonempty.
pub fn num_list_req<T: FromStr>(cfg: &mut Cfg, key: &str, flag: Option<String>) -> Result<Vec<T>>
where
    T::Err: Display,
{
    let s = raw(cfg, key, flag).ok_or_else(|| missing(key))?;
    parse_num_list(key, &s)
}

pub fn num_list_or<T: FromStr>(
    cfg: &mut Cfg,
    key: &str,
    flag: Option<String>,
) -> Result<Vec<T>>
where
    T::Err: Display,
{
    match raw(cfg, key, flag) {
        None => Ok(Vec::new()),
        Some(s) => parse_num_list(key, &s),
    }
}

fn parse_num_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<T>()
                .map_err(|_| bad(key, s, "a comma-separated list of numbers"))
        })
        .collect()
}
