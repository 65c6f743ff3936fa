//! Reading matrices, flags, sections and point sets from JSON files.

use std::io::Read;
use std::path::Path;

use chamberflow_core::density::TorusPoint;
use chamberflow_core::flag::flag_of_matrix;
use chamberflow_core::io::MatrixJson;
use chamberflow_core::{Config, Flag, GroupElement, Mat, Section};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::{CliError, KindArg};

fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_value(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{} is not valid JSON: {e}", path.display())))
}

fn from_value<T: DeserializeOwned>(v: Value, path: &Path) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A matrix given as {"n", "rows"} or as a bare array of rows.
fn matrix_of(v: Value, path: &Path) -> Result<Mat, CliError> {
    let j: MatrixJson = if v.is_array() {
        let rows: Vec<Vec<f64>> = from_value(v, path)?;
        MatrixJson { n: rows.len(), rows }
    } else {
        from_value(v, path)?
    };
    j.to_mat().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path, cfg: &Config) -> Result<GroupElement, CliError> {
    let m = matrix_of(read_value(path)?, path)?;
    GroupElement::new_with(m, cfg).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn flag_of_value(v: Value, path: &Path) -> Result<Flag, CliError> {
    if v.get("rep").is_some() {
        return from_value(v, path);
    }
    let m = matrix_of(v, path)?;
    flag_of_matrix(&m).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A flag JSON {"rep", "canonical"}, or any invertible matrix standing for
/// the flag of its columns.
pub fn read_flag(path: &Path) -> Result<Flag, CliError> {
    flag_of_value(read_value(path)?, path)
}

/// A full section JSON, or a flag used as the base of a section of `kind`.
pub fn read_section(path: &Path, kind: KindArg) -> Result<Section, CliError> {
    let v = read_value(path)?;
    if v.get("kind").is_some() && v.get("base").is_some() {
        return from_value(v, path);
    }
    let base = flag_of_value(v, path)?;
    Ok(match kind {
        KindArg::Unipotent => Section::unipotent(base),
        KindArg::Compact => Section::compact(base),
    })
}

pub fn read_seeds(path: &Path, cfg: &Config) -> Result<Vec<GroupElement>, CliError> {
    let v = read_value(path)?;
    let Value::Array(items) = v else {
        return Err(CliError::Input(format!("{}: expected an array of matrices", path.display())));
    };
    items
        .into_iter()
        .map(|item| {
            let m = matrix_of(item, path)?;
            GroupElement::new_with(m, cfg).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

pub fn read_points(path: &Path) -> Result<Vec<TorusPoint>, CliError> {
    let pts: Vec<TorusPoint> = from_value(read_value(path)?, path)?;
    // normalize the torus part into [0, 1)
    Ok(pts.into_iter().map(|p| TorusPoint::new(p.v, p.c)).collect())
}
