//! Plain-text instance files: one point per line, coordinates separated by
//! commas and/or whitespace, `#` starts a comment line.

use std::fmt::Write as _;
use std::path::Path;

use cmle_core::PointSet;

use crate::CliError;

/// Parses an instance; errors name the 1-based line.
pub fn parse_instance(text: &str) -> Result<PointSet, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let v: f64 = t
                    .parse()
                    .map_err(|_| CliError::input(format!("line {}: `{t}` is not a number", no + 1)))?;
                if !v.is_finite() {
                    return Err(CliError::input(format!("line {}: coordinate `{t}` is not finite", no + 1)));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(CliError::input(format!(
                    "line {}: expected {d} coordinates, found {}",
                    no + 1,
                    row.len()
                )))
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input("instance contains no points"));
    }
    Ok(PointSet::new(rows)?)
}

pub fn read_instance(path: &Path) -> Result<PointSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| e.context(&path.display().to_string()))
}

/// Writes one point per line with shortest round-trip decimals, so reading
/// the text back reproduces every coordinate bit for bit.
pub fn format_instance(x: &PointSet) -> String {
    let mut out = String::new();
    for p in x.iter() {
        for (i, v) in p.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Reads 1-based cluster labels separated by commas or whitespace and
/// returns them 0-based together with the number of clusters.
pub fn parse_labels(text: &str) -> Result<(Vec<usize>, usize), CliError> {
    let mut labels = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for t in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: usize = t
                .parse()
                .map_err(|_| CliError::input(format!("line {}: `{t}` is not a positive label", no + 1)))?;
            if v == 0 {
                return Err(CliError::input(format!("line {}: labels start at 1", no + 1)));
            }
            labels.push(v - 1);
        }
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    Ok((labels, k))
}

pub fn read_labels(path: &Path) -> Result<(Vec<usize>, usize), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_labels(&text).map_err(|e| e.context(&path.display().to_string()))
}
