//! Writing reports: 9 significant digits for computed floats, inputs echoed
//! exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};

use bachelier_core::simulate::fmt9;
use serde_json::{Number, Value};

use crate::args::OutputArgs;
use crate::CliError;

/// A computed float rounded to 9 significant digits (`null` if not finite).
pub fn num(x: f64) -> Value {
    fmt9(x)
        .parse::<f64>()
        .ok()
        .and_then(Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

pub fn num_map(m: &BTreeMap<String, f64>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), num(*v))).collect())
}

pub fn emit(out: &OutputArgs, bytes: &[u8]) -> Result<(), CliError> {
    match &out.output {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json(out: &OutputArgs, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    emit(out, text.as_bytes())
}
