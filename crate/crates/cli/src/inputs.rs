//! Named initial profiles, control files and small value parsers.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;
use fw_srde::control::BUILTIN_CONTROLS;
use fw_srde::{builtin_control, ControlField, EndpointConstraint, Field, GridSpec};

pub const INITIAL_PROFILES: [&str; 3] = ["zero", "bump", "gaussian"];

/// * `zero`
/// * `bump`: `0.5 exp(-x^2)`
/// * `gaussian`: `exp(-x^2)`
pub fn initial_profile(name: &str, grid: GridSpec) -> Result<Field, CliError> {
    match name {
        "zero" => Ok(Field::zeros(grid)),
        "bump" => Ok(Field::from_fn(grid, |x| 0.5 * (-x * x).exp())),
        "gaussian" => Ok(Field::from_fn(grid, |x| (-x * x).exp())),
        _ => Err(CliError::Input(format!(
            "unknown initial profile `{name}` (expected one of {})",
            INITIAL_PROFILES.join(", ")
        ))),
    }
}

pub fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    s.parse().map_err(|e: fw_srde::Error| CliError::Usage(format!("--grid: {e}")))
}

/// `a,x0,T`.
pub fn parse_event(s: &str) -> Result<EndpointConstraint, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--event `{s}` is not of the form a,x0,T"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok(EndpointConstraint { a: v[0], x0: v[1], t: v[2] })
}

#[derive(Deserialize)]
struct ControlRecord {
    t_index: usize,
    x_index: usize,
    value: f64,
}

/// A built-in control by name, or a CSV file with header columns
/// `t_index, x_index, value` (others are ignored). Cells missing from the
/// file are zero.
pub fn load_control(source: &str, grid: GridSpec) -> Result<ControlField, CliError> {
    if BUILTIN_CONTROLS.contains(&source) {
        return Ok(builtin_control(source, grid)?);
    }
    let path = Path::new(source);
    if !path.exists() && !source.contains(['.', '/', '\\']) {
        return Err(fw_srde::Error::UnknownControl(source.into()).into());
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| read_error(path, e))?;
    let n = grid.space_points;
    let mut values = vec![0.0; grid.time_steps * n];
    let mut seen = vec![false; values.len()];
    for (line, rec) in reader.deserialize::<ControlRecord>().enumerate() {
        let rec = rec.map_err(|e| read_error(path, e))?;
        if rec.t_index >= grid.time_steps || rec.x_index >= n {
            return Err(CliError::Input(format!(
                "{}: record {} has (t_index, x_index) = ({}, {}) outside the {} x {} control grid",
                path.display(),
                line + 1,
                rec.t_index,
                rec.x_index,
                grid.time_steps,
                n
            )));
        }
        let i = rec.t_index * n + rec.x_index;
        if std::mem::replace(&mut seen[i], true) {
            return Err(CliError::Input(format!(
                "{}: cell ({}, {}) appears twice",
                path.display(),
                rec.t_index,
                rec.x_index
            )));
        }
        values[i] = rec.value;
    }
    Ok(ControlField::new(grid, values)?)
}

fn read_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!("checked to be an I/O error"),
        }
    } else {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_parsing() {
        let e = parse_event("1.5, -0.5, 2").unwrap();
        assert_eq!((e.a, e.x0, e.t), (1.5, -0.5, 2.0));
        assert!(parse_event("1,2").is_err());
        assert!(parse_event("1,x,2").is_err());
    }

    #[test]
    fn named_profiles() {
        let g = GridSpec::new(1.0, 4, 2.0, 8).unwrap();
        assert_eq!(initial_profile("bump", g).unwrap().values[g.origin_index()], 0.5);
        assert!(matches!(initial_profile("nope", g), Err(CliError::Input(_))));
    }

    #[test]
    fn unknown_control_name() {
        let g = GridSpec::new(1.0, 4, 2.0, 8).unwrap();
        let err = load_control("wiggle", g).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let err = load_control("missing/file.csv", g).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
