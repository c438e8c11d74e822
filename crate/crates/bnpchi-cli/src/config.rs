//! JSON config file support. A config file supplies the same values as the
//! command-line flags (keys use underscores: `n_atoms`, `x_edges`); explicit
//! flags always win. Unknown keys are an error so typos cannot silently fall
//! back to defaults.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::Value;

use crate::CliError;

pub struct FileConfig {
    map: serde_json::Map<String, Value>,
    path: String,
    used: BTreeSet<String>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { map: serde_json::Map::new(), path: String::new(), used: BTreeSet::new() });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        match value {
            Value::Object(map) => {
                Ok(Self { map, path: path.display().to_string(), used: BTreeSet::new() })
            }
            _ => Err(CliError::Usage(format!("config {} must be a JSON object", path.display()))),
        }
    }

    fn get(&mut self, key: &str) -> Option<&Value> {
        if self.map.contains_key(key) {
            self.used.insert(key.to_string());
        }
        self.map.get(key)
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        CliError::Usage(format!("config {}: key \"{key}\" must be {want}", self.path))
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| self.bad(key, "a finite number")),
            Some(_) => Err(self.bad(key, "a number")),
        }
    }

    pub fn u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => {
                n.as_u64().map(Some).ok_or_else(|| self.bad(key, "a nonnegative integer"))
            }
            Some(_) => Err(self.bad(key, "a nonnegative integer")),
        }
    }

    pub fn usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.bad(key, "a string")),
        }
    }

    pub fn boolean(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(self.bad(key, "true or false")),
        }
    }

    /// Edge lists come either as a JSON array of numbers or as the same
    /// comma-separated string the flag accepts.
    pub fn number_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => {
                let s = s.clone();
                crate::parse_number_list(&s)
                    .map(Some)
                    .map_err(|e| CliError::Usage(format!("config {}: key \"{key}\": {e}", self.path)))
            }
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items.clone() {
                    match item {
                        Value::Number(n) => match n.as_f64() {
                            Some(v) => out.push(v),
                            None => return Err(self.bad(key, "an array of finite numbers")),
                        },
                        _ => return Err(self.bad(key, "an array of numbers")),
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.bad(key, "an array of numbers or a comma-separated string")),
        }
    }

    /// Errors if any key was never consumed by the active command.
    pub fn finish(self) -> Result<(), CliError> {
        let unknown: Vec<&String> =
            self.map.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let list = unknown.iter().map(|s| format!("\"{s}\"")).collect::<Vec<_>>().join(", ");
            Err(CliError::Usage(format!(
                "config {}: unknown key(s) for this command: {list}",
                self.path
            )))
        }
    }
}
