//! Settings files: JSON or TOML (by extension), holding any subset of a
//! settings struct's fields. Keys present in the file replace the defaults.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn read_value(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
    };
    if !value.is_object() {
        bail!("{}: expected a table of settings", path.display());
    }
    Ok(value)
}

/// `base` with every key from the file at `path` applied on top. Unknown
/// keys are rejected.
pub fn overlay<T: Serialize + DeserializeOwned>(base: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(base) };
    let mut merged = serde_json::to_value(&base).context("serializing defaults")?;
    let Value::Object(fields) = read_value(path)? else { unreachable!() };
    let target = merged.as_object_mut().context("settings are not a struct")?;
    for (k, v) in fields {
        if !target.contains_key(&k) {
            bail!("{}: unknown setting '{k}'", path.display());
        }
        target.insert(k, v);
    }
    serde_json::from_value(merged).with_context(|| format!("{}: invalid settings", path.display()))
}
