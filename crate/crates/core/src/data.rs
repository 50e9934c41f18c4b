//! The observational dataset container and its CSV form.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const TREATMENT_COLUMN: &str = "W";
pub const OUTCOME_COLUMN: &str = "Y";

/// n units: named covariates, binary treatment, real outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    covariates: Matrix,
    treatment: Vec<u8>,
    outcome: Vec<f64>,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        covariates: Matrix,
        treatment: Vec<u8>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        let n = covariates.nrows();
        if names.len() != covariates.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} covariate columns",
                names.len(),
                covariates.ncols()
            )));
        }
        if treatment.len() != n || outcome.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "covariates have {n} rows, treatment {}, outcome {}",
                treatment.len(),
                outcome.len()
            )));
        }
        for (j, a) in names.iter().enumerate() {
            if names[..j].contains(a) {
                return Err(Error::InvalidData(format!("duplicate covariate name `{a}`")));
            }
        }
        if let Some(i) = treatment.iter().position(|&w| w > 1) {
            return Err(Error::InvalidData(format!("treatment at row {i} is not 0/1")));
        }
        if let Some(i) = outcome.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite outcome at row {i}")));
        }
        if let Some(k) = covariates.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate `{}` at row {}",
                names[k % names.len()],
                k / names.len()
            )));
        }
        Ok(Dataset {
            names,
            covariates,
            treatment,
            outcome,
        })
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn treatment_f64(&self) -> Vec<f64> {
        self.treatment.iter().map(|&w| f64::from(w)).collect()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.covariates.column(self.column_index(name)?))
    }

    pub fn row(&self, i: usize) -> DatasetRow<'_> {
        DatasetRow {
            names: &self.names,
            values: self.covariates.row(i),
        }
    }

    pub fn num_treated(&self) -> usize {
        self.treatment.iter().filter(|&&w| w == 1).count()
    }

    /// Same covariates and treatment with a replaced outcome vector.
    pub fn with_outcome(&self, outcome: Vec<f64>) -> Result<Self> {
        Dataset::new(
            self.names.clone(),
            self.covariates.clone(),
            self.treatment.clone(),
            outcome,
        )
    }

    /// Units selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            covariates: self.covariates.select_rows(idx),
            treatment: idx.iter().map(|&i| self.treatment[i]).collect(),
            outcome: idx.iter().map(|&i| self.outcome[i]).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.extend([TREATMENT_COLUMN, OUTCOME_COLUMN]);
        let rows = (0..self.len()).map(|i| {
            let mut r: Vec<String> = self.covariates.row(i).iter().map(|v| v.to_string()).collect();
            r.push(self.treatment[i].to_string());
            r.push(self.outcome[i].to_string());
            r
        });
        write_csv_atomic(path, &header, rows)
    }

    /// Reads a dataset written by [`Dataset::write_csv`] (columns `W` and `Y`,
    /// every other column a covariate).
    pub fn read_csv(path: &Path) -> Result<Self> {
        read_mapped_csv(path, &ColumnMapping::default())
    }
}

/// A view of one unit's covariates.
#[derive(Debug, Clone, Copy)]
pub struct DatasetRow<'a> {
    names: &'a [String],
    values: &'a [f64],
}

impl<'a> DatasetRow<'a> {
    pub fn new(names: &'a [String], values: &'a [f64]) -> Self {
        DatasetRow { names, values }
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }
}

/// Name-based access to a unit's covariates.
pub trait Covariates {
    fn value(&self, name: &str) -> Option<f64>;

    fn require(&self, name: &str) -> Result<f64> {
        self.value(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

impl Covariates for DatasetRow<'_> {
    fn value(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.values[j])
    }
}

impl Covariates for BTreeMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Covariates for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Covariates for [(&str, f64); N] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

/// Which CSV columns hold treatment, outcome, and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub treatment: String,
    pub outcome: String,
    /// Covariate columns; `None` means every remaining column.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            treatment: TREATMENT_COLUMN.to_string(),
            outcome: OUTCOME_COLUMN.to_string(),
            covariates: None,
        }
    }
}

/// A treatment column containing values other than 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BadTreatmentRows {
    /// (1-based data row, raw value), at most ten entries.
    pub rows: Vec<(usize, String)>,
    pub total: usize,
}

impl std::fmt::Display for BadTreatmentRows {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "treatment must be 0 or 1; {} offending row(s):", self.total)?;
        for (r, v) in &self.rows {
            write!(f, " row {r}=`{v}`")?;
        }
        Ok(())
    }
}

fn parse_number(raw: &str, column: &str, row: usize) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::InvalidData(format!("column `{column}` row {row}: `{raw}` is not numeric"))
    })?;
    if !v.is_finite() {
        return Err(Error::InvalidData(format!(
            "column `{column}` row {row}: non-finite value"
        )));
    }
    Ok(v)
}

/// Reads a header-first CSV file into a [`Dataset`] using `mapping`.
pub fn read_mapped_csv(path: &Path, mapping: &ColumnMapping) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidData(format!("{}: {other:?}", path.display())),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let w_col = find(&mapping.treatment)?;
    let y_col = find(&mapping.outcome)?;
    let cov_names: Vec<String> = match &mapping.covariates {
        Some(c) => c.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != w_col && *j != y_col)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let cov_cols = cov_names
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::new();
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    let mut bad = BadTreatmentRows {
        rows: Vec::new(),
        total: 0,
    };
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let w_raw = record.get(w_col).unwrap_or("").trim();
        match w_raw.parse::<f64>() {
            Ok(v) if v == 0.0 || v == 1.0 => treatment.push(v as u8),
            _ => {
                bad.total += 1;
                if bad.rows.len() < 10 {
                    bad.rows.push((row, w_raw.to_string()));
                }
            }
        }
        outcome.push(parse_number(record.get(y_col).unwrap_or(""), &mapping.outcome, row)?);
        for (&c, name) in cov_cols.iter().zip(&cov_names) {
            values.push(parse_number(record.get(c).unwrap_or(""), name, row)?);
        }
    }
    if bad.total > 0 {
        return Err(Error::InvalidData(bad.to_string()));
    }
    let n = outcome.len();
    let covariates = Matrix::from_row_major(n, cov_names.len(), values)?;
    Dataset::new(cov_names, covariates, treatment, outcome)
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes a header and rows as CSV and writes them atomically.
pub fn write_csv_atomic<I, R, S>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}
