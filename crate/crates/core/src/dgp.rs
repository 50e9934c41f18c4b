//! Simulation scenarios with full ground truth.
//!
//! Five covariates: `income`, `test_score`, `neighborhood` (iid standard
//! normal), `minority` ~ Bernoulli(0.4) and `female` ~ Bernoulli(0.5).
//! Treatment is Bernoulli(0.4) below the sample median of income and
//! Bernoulli(0.6) at or above it. Potential outcomes are
//! `y0 = income + neighborhood + u` and `y1 = y0 + tau(x)` with
//! `u ~ N(0, noise_sd²)`.
//!
//! Continuous draws are snapped to a 2⁻³² grid. At these magnitudes every
//! sum formed by the outcome equations is then exact in f64, so potential
//! outcomes, recovered noise and effect differences agree bitwise no matter
//! how the additions are associated.
//!
//! Random streams, each derived from the master seed and a fixed tag:
//! 0 income, 1 test_score, 2 neighborhood, 3 minority, 4 female,
//! 5 treatment, 6 outcome noise.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{read_mapped_csv, write_csv_atomic, ColumnMapping, Covariates, Dataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

pub const INCOME: &str = "income";
pub const TEST_SCORE: &str = "test_score";
pub const NEIGHBORHOOD: &str = "neighborhood";
pub const MINORITY: &str = "minority";
pub const FEMALE: &str = "female";

pub const COVARIATE_NAMES: [&str; 5] = [INCOME, TEST_SCORE, NEIGHBORHOOD, MINORITY, FEMALE];

pub const MINORITY_RATE: f64 = 0.4;
pub const FEMALE_RATE: f64 = 0.5;
pub const PROPENSITY_LOW: f64 = 0.4;
pub const PROPENSITY_HIGH: f64 = 0.6;

const GRID: f64 = 4_294_967_296.0; // 2^32

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// tau = 2 + 1.5·minority
    Linear,
    /// tau = 2 + 5·minority·female·1(income > 0) + 2·max(test_score, 0)·minority
    ComplexNonlinear,
    /// tau = 2
    Constant,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Linear,
        ScenarioKind::ComplexNonlinear,
        ScenarioKind::Constant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Linear => "linear",
            ScenarioKind::ComplexNonlinear => "complex_nonlinear",
            ScenarioKind::Constant => "constant",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "linear" => Ok(ScenarioKind::Linear),
            "complex_nonlinear" | "complex" | "nonlinear" => Ok(ScenarioKind::ComplexNonlinear),
            "constant" => Ok(ScenarioKind::Constant),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}` (expected linear, complex_nonlinear, constant)"
            ))),
        }
    }
}

fn default_noise_sd() -> f64 {
    1.0
}

fn is_default_noise(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the outcome noise; 0 gives noiseless outcomes.
    #[serde(default = "default_noise_sd", skip_serializing_if = "is_default_noise")]
    pub noise_sd: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n: usize, seed: u64) -> Self {
        ScenarioSpec {
            kind,
            n,
            seed,
            noise_sd: 1.0,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sd = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "scenario needs n >= 2, got {}",
                self.n
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Simulation-only truth for every unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tau_true: Vec<f64>,
    pub ite_true: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub u: Vec<f64>,
    pub propensity: Vec<f64>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.tau_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_true.is_empty()
    }

    /// Average treatment effect in the sample.
    pub fn ate(&self) -> f64 {
        self.ite_true.iter().sum::<f64>() / self.len() as f64
    }

    /// E[Y | X] for each unit: y0 − u + e(x)·tau(x).
    pub fn outcome_mean(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.y0[i] - self.u[i] + self.propensity[i] * self.tau_true[i])
            .collect()
    }

    pub const COLUMNS: [&'static str; 6] = ["tau_true", "ite_true", "y0", "y1", "u", "propensity"];

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = (0..self.len()).map(|i| {
            [
                self.tau_true[i],
                self.ite_true[i],
                self.y0[i],
                self.y1[i],
                self.u[i],
                self.propensity[i],
            ]
            .map(|v| v.to_string())
        });
        write_csv_atomic(path, &Self::COLUMNS, rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidData(format!("{}: {other:?}", path.display())),
        })?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let idx = Self::COLUMNS
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| Error::MissingColumn(c.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 6];
        for (r, rec) in reader.records().enumerate() {
            let rec = rec?;
            for (k, &j) in idx.iter().enumerate() {
                let raw = rec.get(j).unwrap_or("");
                cols[k].push(raw.trim().parse().map_err(|_| {
                    Error::InvalidData(format!("{} row {}: `{raw}`", Self::COLUMNS[k], r + 1))
                })?);
            }
        }
        let mut it = cols.into_iter();
        let mut next = || it.next().unwrap_or_default();
        Ok(GroundTruth {
            tau_true: next(),
            ite_true: next(),
            y0: next(),
            y1: next(),
            u: next(),
            propensity: next(),
        })
    }
}

/// The true conditional average treatment effect at `row`.
pub fn true_cate<C: Covariates + ?Sized>(kind: ScenarioKind, row: &C) -> Result<f64> {
    match kind {
        ScenarioKind::Linear => {
            let m = row.require(MINORITY)?;
            Ok(2.0 + 1.5 * m)
        }
        ScenarioKind::ComplexNonlinear => {
            let m = row.require(MINORITY)?;
            let f = row.require(FEMALE)?;
            let inc = row.require(INCOME)?;
            let ts = row.require(TEST_SCORE)?;
            let high = if inc > 0.0 { 1.0 } else { 0.0 };
            Ok(2.0 + 5.0 * m * f * high + 2.0 * ts.max(0.0) * m)
        }
        ScenarioKind::Constant => Ok(2.0),
    }
}

/// Treatment probability from income relative to the sample median.
/// Ties go to the high arm.
pub fn propensity(income: f64, income_median: f64) -> f64 {
    if income < income_median {
        PROPENSITY_LOW
    } else {
        PROPENSITY_HIGH
    }
}

/// Median of a slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn snap(v: f64) -> f64 {
    (v * GRID).round() / GRID
}

fn normal_column(seed: u64, stream: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[stream]);
    (0..n)
        .map(|_| snap(scale * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

fn bernoulli_column(seed: u64, stream: u64, probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[stream]);
    probs
        .map(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect()
}

/// Draws one simulated dataset with its ground truth.
pub fn generate(spec: &ScenarioSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = spec.n;
    let income = normal_column(spec.seed, 0, n, 1.0);
    let test_score = normal_column(spec.seed, 1, n, 1.0);
    let neighborhood = normal_column(spec.seed, 2, n, 1.0);
    let minority = bernoulli_column(spec.seed, 3, std::iter::repeat_n(MINORITY_RATE, n));
    let female = bernoulli_column(spec.seed, 4, std::iter::repeat_n(FEMALE_RATE, n));

    let med = median(&income);
    let prop: Vec<f64> = income.iter().map(|&x| propensity(x, med)).collect();
    let treatment: Vec<u8> = bernoulli_column(spec.seed, 5, prop.iter().copied())
        .into_iter()
        .map(|w| w as u8)
        .collect();
    let u = normal_column(spec.seed, 6, n, spec.noise_sd);

    let names: Vec<String> = COVARIATE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut values = Vec::with_capacity(n * 5);
    for i in 0..n {
        values.extend([income[i], test_score[i], neighborhood[i], minority[i], female[i]]);
    }
    let x = Matrix::from_row_major(n, 5, values)?;

    let mut tau_true = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    for i in 0..n {
        let row = crate::data::DatasetRow::new(&names, x.row(i));
        let tau = true_cate(spec.kind, &row)?;
        let base = income[i] + neighborhood[i] + u[i];
        let treated = base + tau;
        tau_true.push(tau);
        y0.push(base);
        y1.push(treated);
        outcome.push(if treatment[i] == 1 { treated } else { base });
    }
    let ite_true = y1.iter().zip(&y0).map(|(a, b)| a - b).collect();

    let data = Dataset::new(names, x, treatment, outcome)?;
    let truth = GroundTruth {
        tau_true,
        ite_true,
        y0,
        y1,
        u,
        propensity: prop,
    };
    Ok((data, truth))
}

/// Reads a dataset exported by this module.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_mapped_csv(path, &ColumnMapping::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_cate_examples() {
        let lin = [(MINORITY, 1.0)];
        assert_eq!(true_cate(ScenarioKind::Linear, &lin).unwrap(), 3.5);
        let row = [(MINORITY, 1.0), (FEMALE, 1.0), (INCOME, 1.2), (TEST_SCORE, 0.5)];
        assert_eq!(true_cate(ScenarioKind::ComplexNonlinear, &row).unwrap(), 8.0);
        let row = [(MINORITY, 0.0), (FEMALE, 1.0), (INCOME, 2.0), (TEST_SCORE, 3.0)];
        assert_eq!(true_cate(ScenarioKind::ComplexNonlinear, &row).unwrap(), 2.0);
        let empty: [(&str, f64); 0] = [];
        assert_eq!(true_cate(ScenarioKind::Constant, &empty).unwrap(), 2.0);
    }

    #[test]
    fn true_cate_missing_covariate() {
        let row = [(MINORITY, 1.0), (FEMALE, 1.0)];
        let err = true_cate(ScenarioKind::ComplexNonlinear, &row).unwrap_err();
        assert!(err.to_string().contains("income"), "{err}");
    }

    #[test]
    fn propensity_examples() {
        assert_eq!(propensity(-1.0, 0.0), 0.4);
        assert_eq!(propensity(1.0, 0.0), 0.6);
        assert_eq!(propensity(0.0, 0.0), 0.6);
    }

    #[test]
    fn rejects_tiny_n() {
        assert!(generate(&ScenarioSpec::new(ScenarioKind::Linear, 1, 0)).is_err());
    }

    #[test]
    fn spec_json_without_noise_field() {
        let s: ScenarioSpec =
            serde_json::from_str(r#"{"kind": "complex_nonlinear", "n": 10, "seed": 3}"#).unwrap();
        assert_eq!(s, ScenarioSpec::new(ScenarioKind::ComplexNonlinear, 10, 3));
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"kind":"complex_nonlinear","n":10,"seed":3}"#
        );
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
