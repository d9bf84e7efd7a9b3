//! CSV ingestion: column mapping, listwise deletion of incomplete rows,
//! and binary-outcome validation.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};

/// Names the CSV columns holding each model variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub outcome: String,
    pub exposure: String,
    pub mediators: Vec<String>,
    pub covariates: Vec<String>,
    pub outcome_kind: OutcomeKind,
}

impl ColumnMapping {
    pub fn validate(&self) -> Result<()> {
        if self.mediators.is_empty() {
            return Err(Error::InvalidArgument(
                "mapping must name at least one mediator column".into(),
            ));
        }
        let mut seen = HashSet::new();
        for name in self.all_columns() {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty column name in mapping".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "column {name:?} mapped more than once"
                )));
            }
        }
        Ok(())
    }

    fn all_columns(&self) -> Vec<String> {
        let mut cols = vec![self.outcome.clone(), self.exposure.clone()];
        cols.extend(self.mediators.iter().cloned());
        cols.extend(self.covariates.iter().cloned());
        cols
    }

    /// Parses the flat `key = value` mapping format:
    ///
    /// ```text
    /// outcome = y
    /// exposure = x
    /// mediators = m1, m2
    /// covariates = z1, z2
    /// outcome_kind = continuous
    /// ```
    ///
    /// `covariates` may be omitted; lines starting with `#` are comments.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut outcome = None;
        let mut exposure = None;
        let mut mediators = Vec::new();
        let mut covariates = Vec::new();
        let mut outcome_kind = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "mapping line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                ))
            })?;
            let value = value.trim();
            let list = || -> Vec<String> {
                value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            };
            match key.trim() {
                "outcome" => outcome = Some(value.to_string()),
                "exposure" => exposure = Some(value.to_string()),
                "mediators" => mediators = list(),
                "covariates" => covariates = list(),
                "outcome_kind" => {
                    outcome_kind = Some(match value {
                        "continuous" => OutcomeKind::Continuous,
                        "binary" => OutcomeKind::Binary,
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "mapping: outcome_kind must be continuous or binary, got {other:?}"
                            )))
                        }
                    })
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "mapping: unknown key {other:?}"
                    )))
                }
            }
        }
        let mapping = ColumnMapping {
            outcome: outcome
                .ok_or_else(|| Error::InvalidArgument("mapping: missing `outcome`".into()))?,
            exposure: exposure
                .ok_or_else(|| Error::InvalidArgument("mapping: missing `exposure`".into()))?,
            mediators,
            covariates,
            outcome_kind: outcome_kind
                .ok_or_else(|| Error::InvalidArgument("mapping: missing `outcome_kind`".into()))?,
        };
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }
}

/// A loaded dataset plus the listwise-deletion count.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Rows dropped because a mapped cell was missing or unparseable.
    pub dropped_rows: usize,
}

/// Reads a header-bearing CSV into a column-major dataset. Rows with any
/// missing or unparseable mapped cell are dropped and counted. Binary
/// outcome cells must be the literal `0` or `1`.
pub fn load_csv(path: &Path, mapping: &ColumnMapping) -> Result<LoadedData> {
    mapping.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let outcome_idx = col_index(&mapping.outcome)?;
    let exposure_idx = col_index(&mapping.exposure)?;
    let mediator_idx = mapping
        .mediators
        .iter()
        .map(|m| col_index(m))
        .collect::<Result<Vec<_>>>()?;
    let covariate_idx = mapping
        .covariates
        .iter()
        .map(|z| col_index(z))
        .collect::<Result<Vec<_>>>()?;

    let mut exposure = Vec::new();
    let mut mediators = vec![Vec::new(); mediator_idx.len()];
    let mut outcome = Vec::new();
    let mut covariates = vec![Vec::new(); covariate_idx.len()];
    let mut dropped = 0usize;
    let mut non_binary_rows = Vec::new();

    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |idx: usize| -> Option<f64> {
            let raw = record.get(idx)?.trim();
            if raw.is_empty() {
                return None;
            }
            raw.parse::<f64>().ok()
        };
        let x = cell(exposure_idx);
        let ms: Vec<Option<f64>> = mediator_idx.iter().map(|&i| cell(i)).collect();
        let zs: Vec<Option<f64>> = covariate_idx.iter().map(|&i| cell(i)).collect();
        let y = cell(outcome_idx);
        let complete =
            x.is_some() && y.is_some() && ms.iter().all(Option::is_some) && zs.iter().all(Option::is_some);
        if !complete {
            dropped += 1;
            continue;
        }
        if mapping.outcome_kind == OutcomeKind::Binary {
            let literal = record.get(outcome_idx).unwrap_or("").trim();
            if literal != "0" && literal != "1" {
                non_binary_rows.push(row_no + 1);
                continue;
            }
        }
        exposure.push(x.unwrap());
        outcome.push(y.unwrap());
        for (col, v) in mediators.iter_mut().zip(ms) {
            col.push(v.unwrap());
        }
        for (col, v) in covariates.iter_mut().zip(zs) {
            col.push(v.unwrap());
        }
    }

    if !non_binary_rows.is_empty() {
        return Err(Error::NotBinary {
            column: mapping.outcome.clone(),
            rows: non_binary_rows,
        });
    }
    if exposure.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(LoadedData {
        dataset: Dataset::new(exposure, mediators, outcome, covariates)?,
        dropped_rows: dropped,
    })
}
