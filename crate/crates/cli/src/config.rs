//! JSON parameter files. Keys are the snake_case names of the command's
//! parameters plus the shared `out` and `format`; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use triplebin_core::{Error, Result};

use crate::{Family, Format};

#[derive(Debug, Default)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub body: Map<String, Value>,
}

fn config_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_error(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| config_error(path, e))?;
        let Value::Object(mut body) = value else {
            return Err(config_error(path, "top level must be an object"));
        };
        let out = body
            .remove("out")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| config_error(path, e))?;
        let format = body
            .remove("format")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| config_error(path, e))?;
        Ok(FileConfig { out, format, body })
    }

    pub fn take<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>> {
        self.body
            .remove(key)
            .map(|v| serde_json::from_value(v).map_err(|e| Error::Config(format!("{key}: {e}"))))
            .transpose()
    }

    /// Deserializes the remaining keys.
    pub fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(Value::Object(self.body.clone()))
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Deserializes the remaining keys laid over `base`, merging nested
    /// objects key by key.
    pub fn parse_over<T: DeserializeOwned + serde::Serialize>(&self, base: &T) -> Result<T> {
        let mut merged = serde_json::to_value(base).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, Value::Object(self.body.clone()));
        serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesFile {
    pub family: Option<Family>,
    pub order_a: Option<Vec<u32>>,
    pub order_b: Option<Vec<u32>>,
    pub hull_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditFile {
    pub order_a: Option<u32>,
    pub order_b: Option<Vec<u32>>,
    pub k_a: Option<u32>,
    pub k_b: Option<u32>,
    pub windows: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpWrapFile {
    pub order_a: Option<u32>,
    pub order_b: Option<u32>,
}
