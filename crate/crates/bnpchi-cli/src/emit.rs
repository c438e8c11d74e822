//! Report emission: the JSON envelope with resolved config and tool
//! version, significant-digit normalization, and output writing.
//!
//! Every floating-point number in a JSON report is rounded to 12
//! significant digits so reports are byte-stable across platforms and
//! thread counts; the only run-varying field is `generated_unix_s`.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::CliError;

/// Rounds every non-integer number in the tree to 12 significant digits.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().expect("checked is_f64");
                let rounded: f64 = format!("{f:.11e}").parse().expect("formatted float");
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *value = Value::Number(num);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// A float in CSV output: 12 significant digits, scientific notation.
pub fn csv_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Wraps a command result with the resolved configuration, tool version,
/// and a timestamp (the one field excluded from byte comparisons).
pub fn envelope(config: Value, result: Value) -> Value {
    let mut root = Map::new();
    root.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    root.insert("config".into(), config);
    root.insert("result".into(), result);
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    root.insert("generated_unix_s".into(), json!(now));
    let mut v = Value::Object(root);
    round_floats(&mut v);
    v
}

pub fn write_text(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
    }
}

pub fn write_json(out: Option<&PathBuf>, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_text(out, &text)
}
