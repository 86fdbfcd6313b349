//! `--config` files.
//!
//! A config file is TOML holding option values under their flag names, e.g.
//! `eps = 0.1` or `eps-grid = [0.1, 0.05]`. Keys may sit at the top level or
//! in a table named after the subcommand (`[verify-ldp]`); when such a table
//! exists only it is read. Values given as flags replace file values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub fn merge<A>(command: &str, flags: &A, file: Option<&Path>) -> Result<A, CliError>
where
    A: Serialize + DeserializeOwned,
{
    let mut merged = match file {
        Some(path) => read_section(command, path)?,
        None => Map::new(),
    };
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))? else {
        unreachable!("argument structs serialize to maps")
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| match file {
        Some(path) => CliError::Usage(format!("{}: {e}", path.display())),
        None => CliError::Usage(e.to_string()),
    })
}

fn read_section(command: &str, path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let section = match table.get(command) {
        Some(toml::Value::Table(t)) => t.clone(),
        _ => table.into_iter().filter(|(_, v)| !v.is_table()).collect(),
    };
    match serde_json::to_value(section).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))? {
        Value::Object(map) => Ok(map),
        _ => unreachable!("tables serialize to maps"),
    }
}
