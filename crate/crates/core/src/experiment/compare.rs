//! Row-by-row comparison of two result tables with the same schema.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use super::records::{
    ATTACK_COLUMNS, DELAY_COLUMNS, OFFSET_COLUMNS, RACE_COLUMNS, TIP_COLUMNS, WEIGHT_COLUMNS,
};
use crate::error::{Error, Result};

struct Schema {
    name: &'static str,
    columns: &'static [&'static str],
    keys: &'static [&'static str],
    /// Preferred value column, used when filled in.
    stochastic: &'static str,
    /// Fallback value column.
    analytic: &'static str,
}

const SCHEMAS: &[Schema] = &[
    Schema {
        name: "weight",
        columns: WEIGHT_COLUMNS,
        keys: &["regime", "t"],
        stochastic: "sim_mean",
        analytic: "expected_weight",
    },
    Schema {
        name: "tips",
        columns: TIP_COLUMNS,
        keys: &["regime", "t"],
        stochastic: "tips_mean",
        analytic: "tips_mean",
    },
    Schema {
        name: "delay",
        columns: DELAY_COLUMNS,
        keys: &["regime", "m", "lambda"],
        stochastic: "delay_sim_mean",
        analytic: "delay_analytic",
    },
    Schema {
        name: "attack",
        columns: ATTACK_COLUMNS,
        keys: &["regime", "m", "lambda", "mu", "method"],
        stochastic: "prob_mc",
        analytic: "prob_formula",
    },
    Schema {
        name: "race",
        columns: RACE_COLUMNS,
        keys: &["alpha", "beta", "p"],
        stochastic: "prob_mc",
        analytic: "prob_formula",
    },
    Schema {
        name: "offset",
        columns: OFFSET_COLUMNS,
        keys: &["offset", "p"],
        stochastic: "prob_formula",
        analytic: "prob_formula",
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    /// 1-based data row in the reference table.
    pub row: usize,
    pub key: String,
    pub reference: f64,
    pub candidate: f64,
    /// `|candidate − reference| / |reference|`, or the absolute difference
    /// when the reference is zero.
    pub error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema: &'static str,
    pub tolerance: f64,
    pub rows: Vec<RowError>,
    pub max_error: f64,
    pub passed: bool,
}

impl CompareReport {
    pub fn failures(&self) -> impl Iterator<Item = &RowError> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(bytes: &[u8], label: &str) -> Result<Table> {
    let mismatch = |e: csv::Error| Error::SchemaMismatch(format!("{label}: {e}"));
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(mismatch)?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(mismatch)?;
    Ok(Table { header, rows })
}

fn schema_for(header: &[String]) -> Option<&'static Schema> {
    SCHEMAS
        .iter()
        .find(|s| s.columns.len() == header.len() && s.columns.iter().zip(header).all(|(a, b)| a == b))
}

fn column(schema: &Schema, name: &str) -> usize {
    schema.columns.iter().position(|c| *c == name).expect("schema column")
}

fn value(schema: &Schema, row: &[String], label: &str, n: usize) -> Result<f64> {
    let pick = |c: &str| {
        let cell = row[column(schema, c)].trim();
        (!cell.is_empty()).then(|| cell.parse::<f64>())
    };
    match pick(schema.stochastic).or_else(|| pick(schema.analytic)) {
        Some(Ok(v)) => Ok(v),
        Some(Err(e)) => Err(Error::SchemaMismatch(format!("{label} row {n}: {e}"))),
        None => Err(Error::SchemaMismatch(format!("{label} row {n}: no value"))),
    }
}

/// Compares two CSV tables. Rows are matched on the schema's key columns;
/// each row's value is its stochastic column when filled in, else its
/// analytic column.
pub fn compare_tables(reference: &[u8], candidate: &[u8], tolerance: f64) -> Result<CompareReport> {
    let a = read_table(reference, "reference")?;
    let b = read_table(candidate, "candidate")?;
    if a.header != b.header {
        return Err(Error::SchemaMismatch(format!(
            "headers differ: [{}] vs [{}]",
            a.header.join(","),
            b.header.join(",")
        )));
    }
    let schema = schema_for(&a.header)
        .ok_or_else(|| Error::SchemaMismatch(format!("unknown header [{}]", a.header.join(","))))?;
    if a.rows.len() != b.rows.len() {
        return Err(Error::SchemaMismatch(format!(
            "row counts differ: {} vs {}",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let key_of = |row: &[String]| -> String {
        schema
            .keys
            .iter()
            .map(|k| row[column(schema, k)].as_str())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, row) in b.rows.iter().enumerate() {
        if index.insert(key_of(row), i).is_some() {
            return Err(Error::SchemaMismatch(format!("candidate has duplicate key [{}]", key_of(row))));
        }
    }
    let mut rows = Vec::with_capacity(a.rows.len());
    for (i, row) in a.rows.iter().enumerate() {
        let key = key_of(row);
        let j = *index
            .get(&key)
            .ok_or_else(|| Error::SchemaMismatch(format!("candidate has no row [{key}]")))?;
        let x = value(schema, row, "reference", i + 1)?;
        let y = value(schema, &b.rows[j], "candidate", j + 1)?;
        let diff = (y - x).abs();
        let error = if x == 0.0 { diff } else { diff / x.abs() };
        rows.push(RowError {
            row: i + 1,
            key,
            reference: x,
            candidate: y,
            error,
            passed: error <= tolerance,
        });
    }
    let max_error = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let passed = rows.iter().all(|r| r.passed);
    Ok(CompareReport {
        schema: schema.name,
        tolerance,
        rows,
        max_error,
        passed,
    })
}

pub fn compare_files(reference: &Path, candidate: &Path, tolerance: f64) -> Result<CompareReport> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    compare_tables(&read(reference)?, &read(candidate)?, tolerance)
}
