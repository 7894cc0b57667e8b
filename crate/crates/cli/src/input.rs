//! Areal data CSV ingestion.
//!
//! Header row, then one row per response with columns `region_id`,
//! `response_type` (`c` or `d`), `value`, `x1..xp`, `centroid_x`,
//! `centroid_y`, `shape_group` (`c` rows only) and an optional `population`
//! (`d` rows only).

use std::path::Path;

use nalgebra::DMatrix;
use wapmc_core::{ArealDataset, Coord};

use crate::error::{CliError, Result};

struct Columns {
    region_id: usize,
    response_type: usize,
    value: usize,
    x: Vec<usize>,
    centroid_x: usize,
    centroid_y: usize,
    shape_group: usize,
    population: Option<usize>,
}

fn locate_columns(path: &Path, header: &csv::StringRecord) -> Result<Columns> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: header.len() + 1,
            message: format!("header has no '{name}' column"),
        })
    };
    let mut x = Vec::new();
    while let Some(c) = find(&format!("x{}", x.len() + 1)) {
        x.push(c);
    }
    if x.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "header has no covariate columns x1..xp".into(),
        });
    }
    let known = ["region_id", "response_type", "value", "centroid_x", "centroid_y", "shape_group", "population"];
    for (i, h) in header.iter().enumerate() {
        let h = h.trim();
        if !known.contains(&h) && !x.contains(&i) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 1,
                column: i + 1,
                message: format!("unexpected column '{h}'"),
            });
        }
    }
    Ok(Columns {
        region_id: require("region_id")?,
        response_type: require("response_type")?,
        value: require("value")?,
        x,
        centroid_x: require("centroid_x")?,
        centroid_y: require("centroid_y")?,
        shape_group: require("shape_group")?,
        population: find("population"),
    })
}

/// Reads and validates an areal data set.
pub fn read_dataset(path: &Path) -> Result<ArealDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = locate_columns(path, &header)?;
    let p = cols.x.len();

    let mut d = ArealDataset::default();
    let mut xc: Vec<f64> = Vec::new();
    let mut xd: Vec<f64> = Vec::new();
    let mut population: Vec<Option<u64>> = Vec::new();
    let mut c_lines: Vec<u64> = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let err = |c: usize, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            column: c + 1,
            message,
        };
        let real = |c: usize| -> Result<f64> {
            let s = field(c);
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(c, format!("expected a finite real, found '{s}'")))
        };
        let region = field(cols.region_id).to_string();
        if region.is_empty() {
            return Err(err(cols.region_id, "empty region_id".into()));
        }
        let covariates = cols.x.iter().map(|&c| real(c)).collect::<Result<Vec<_>>>()?;
        let centroid = Coord::new(real(cols.centroid_x)?, real(cols.centroid_y)?);
        let pop_field = cols.population.map(field).unwrap_or("");
        match field(cols.response_type) {
            "c" => {
                let t = real(cols.value)?;
                let group = field(cols.shape_group);
                if group.is_empty() {
                    return Err(err(cols.shape_group, "Weibull rows need a shape_group".into()));
                }
                if !pop_field.is_empty() {
                    return Err(err(
                        cols.population.unwrap_or(0),
                        "population is only allowed on count rows".into(),
                    ));
                }
                d.region_ids_c.push(region);
                d.t.push(t);
                xc.extend(covariates);
                d.centroids_c.push(centroid);
                d.shape_groups.push(group.to_string());
                c_lines.push(line);
            }
            "d" => {
                let s = field(cols.value);
                let z = s
                    .parse::<u64>()
                    .map_err(|_| err(cols.value, format!("expected a non-negative integer count, found '{s}'")))?;
                let pop = if pop_field.is_empty() {
                    None
                } else {
                    Some(pop_field.parse::<u64>().map_err(|_| {
                        err(
                            cols.population.unwrap_or(0),
                            format!("expected a non-negative integer population, found '{pop_field}'"),
                        )
                    })?)
                };
                d.region_ids_d.push(region);
                d.z.push(z);
                xd.extend(covariates);
                d.centroids_d.push(centroid);
                population.push(pop);
            }
            other => {
                return Err(err(
                    cols.response_type,
                    format!("response_type must be 'c' or 'd', found '{other}'"),
                ))
            }
        }
    }

    let bad: Vec<String> = d
        .t
        .iter()
        .zip(&c_lines)
        .filter(|(t, _)| **t <= 0.0)
        .map(|(t, l)| format!("line {l} (value {t})"))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Validation {
            path: path.to_path_buf(),
            message: format!("Weibull values must be positive; offending rows: {}", bad.join(", ")),
        });
    }

    d.x_c = DMatrix::from_row_slice(d.t.len(), p, &xc);
    d.x_d = DMatrix::from_row_slice(d.z.len(), p, &xd);
    if population.iter().any(Option::is_some) {
        if population.iter().any(Option::is_none) {
            return Err(CliError::Validation {
                path: path.to_path_buf(),
                message: "population must be given on every count row or on none".into(),
            });
        }
        d.population = Some(population.into_iter().flatten().collect());
    }
    d.validate().map_err(|e| CliError::Validation {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(d)
}

/// Writes a data set in the layout read by [`read_dataset`]. Both response
/// types must share the covariate count.
pub fn write_dataset(path: &Path, d: &ArealDataset) -> Result<()> {
    if d.p_c() != d.p_d() {
        return Err(CliError::Argument(format!(
            "Weibull rows have {} covariates but count rows have {}",
            d.p_c(),
            d.p_d()
        )));
    }
    let p = d.p_c();
    let mut header: Vec<String> = ["region_id", "response_type", "value"].map(String::from).to_vec();
    header.extend((1..=p).map(|j| format!("x{j}")));
    header.extend(["centroid_x", "centroid_y", "shape_group"].map(String::from));
    if d.population.is_some() {
        header.push("population".into());
    }
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(d.n_c() + d.n_d());
    for i in 0..d.n_c() {
        let mut row = vec![d.region_ids_c[i].clone(), "c".into(), d.t[i].to_string()];
        row.extend((0..p).map(|j| d.x_c[(i, j)].to_string()));
        row.extend([
            d.centroids_c[i].x.to_string(),
            d.centroids_c[i].y.to_string(),
            d.shape_groups[i].clone(),
        ]);
        if d.population.is_some() {
            row.push(String::new());
        }
        rows.push(row);
    }
    for i in 0..d.n_d() {
        let mut row = vec![d.region_ids_d[i].clone(), "d".into(), d.z[i].to_string()];
        row.extend((0..p).map(|j| d.x_d[(i, j)].to_string()));
        row.extend([d.centroids_d[i].x.to_string(), d.centroids_d[i].y.to_string(), String::new()]);
        if let Some(pop) = &d.population {
            row.push(pop[i].to_string());
        }
        rows.push(row);
    }
    crate::output::write_atomic(path, &crate::output::csv_bytes(&header, rows)?)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let (line, message) = match e.position() {
        Some(pos) => (pos.line(), e.to_string()),
        None => (0, e.to_string()),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        _ => CliError::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message,
        },
    }
}
