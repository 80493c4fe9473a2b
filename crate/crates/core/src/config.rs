//! Flat `key = value` configuration files.
//!
//! The syntax is TOML restricted to top-level keys. Every key must be a field
//! of the target type; unknown keys are rejected so typos do not silently fall
//! back to defaults.

use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};

/// Parses a flat config. Missing keys take the value from `T::default()`.
pub fn from_flat_str<T>(text: &str) -> Result<T>
where
    T: DeserializeOwned + Serialize + Default,
{
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
    let known = toml::Table::try_from(T::default()).map_err(|e| Error::Config(format!("{e}")))?;
    for (key, value) in &table {
        if !known.contains_key(key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        if value.is_table() {
            return Err(Error::Config(format!("key `{key}` must be a plain value")));
        }
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
}

pub fn load_flat<T>(path: &Path) -> Result<T>
where
    T: DeserializeOwned + Serialize + Default,
{
    let text = std::fs::read_to_string(path)?;
    from_flat_str(&text)
}

/// Renders `value` as a flat config file.
pub fn to_flat_string<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(format!("{e}")))
}
