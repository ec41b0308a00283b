//! Flat `key=value` config files and flag/config/default resolution.
//!
//! Keys mirror the long flag names (`min-count`, `enrich-dir`). A flag given
//! on the command line always wins over the config file; the config file wins
//! over the built-in default. Every command echoes its resolved settings back
//! out as `<command>.effective.config`, which parses as a config file again.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Parsed config file contents. `empty` stands in when no `--config` is given
/// so resolution code has a single shape.
#[derive(Debug, Default)]
pub struct ConfigFile {
    label: String,
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Loads a config file: one `key=value` per line, `#` comments, blank
    /// lines ignored. Duplicate keys and lines without `=` are errors.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("config {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "config {}:{lineno}: expected key=value, got {line:?}",
                    path.display()
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "config {}:{lineno}: empty key",
                    path.display()
                )));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!(
                    "config {}:{lineno}: duplicate key {key:?}",
                    path.display()
                )));
            }
        }
        Ok(Self {
            label: path.display().to_string(),
            values,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Loads `--config` if given, otherwise an empty stand-in.
pub fn load_optional(path: &Option<String>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::load(Path::new(p)),
        None => Ok(ConfigFile::empty()),
    }
}

fn parse_as<T>(raw: &str, key: &str, source: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    raw.parse().map_err(|e| {
        CliError::Config(format!("{source} {key}: invalid value {raw:?}: {e}"))
    })
}

/// Flag, then config file, then default.
pub fn pick<T>(flag: &Option<String>, cfg: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    pick_opt(flag, cfg, key).map(|v| v.unwrap_or(default))
}

/// Like [`pick`] but with no default; absent everywhere is `None`.
pub fn pick_opt<T>(flag: &Option<String>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if let Some(raw) = flag {
        return parse_as(raw, key, "flag --").map(Some);
    }
    match cfg.raw(key) {
        Some(raw) => parse_as(raw, key, &format!("config {}: key", cfg.label)).map(Some),
        None => Ok(None),
    }
}

/// Like [`pick`] but the setting must come from somewhere.
pub fn pick_required<T>(flag: &Option<String>, cfg: &ConfigFile, key: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    pick_opt(flag, cfg, key)?.ok_or_else(|| {
        CliError::Config(format!("missing --{key} flag (or {key}= config entry)"))
    })
}

/// Presence flags: the flag can only switch on; `key=false` in a config file
/// switches off.
pub fn pick_switch(flag: bool, cfg: &ConfigFile, key: &str) -> Result<bool, CliError> {
    if flag {
        return Ok(true);
    }
    match cfg.raw(key) {
        Some(raw) => parse_as(raw, key, &format!("config {}: key", cfg.label)),
        None => Ok(false),
    }
}

/// Writes resolved settings as a reloadable config file in the output
/// directory, named `<command>.effective.config`.
pub fn write_effective(
    dir: &Path,
    command: &str,
    pairs: &[(&str, String)],
) -> Result<PathBuf, CliError> {
    let mut text = format!("# {command}: effective settings\n");
    for (key, value) in pairs {
        text.push_str(&format!("{key}={value}\n"));
    }
    let path = dir.join(format!("{command}.effective.config"));
    fs::write(&path, text).map_err(|e| {
        CliError::Config(format!("writing {}: {e}", path.display()))
    })?;
    Ok(path)
}
