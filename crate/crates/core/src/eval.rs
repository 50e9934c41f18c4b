//! Accuracy reports against known truth: bias/variance/MSE, the eight
//! demographic subgroups, interval coverage and overlap diagnostics, plus
//! CSV/markdown emission of the resulting tables and figure data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{write_atomic, write_csv_atomic, Dataset};
use crate::dgp::{median, FEMALE, INCOME, MINORITY};
use crate::error::{Error, Result};
use crate::estimates::CateEstimates;

/// Default overlap band half-width.
pub const OVERLAP_EPSILON: f64 = 0.05;

/// Error decomposition of one method's estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// |mean error|
    pub bias: f64,
    /// Population (1/n) variance of the errors.
    pub variance: f64,
    pub mse: f64,
}

impl MethodReport {
    /// `mse = bias² + variance` up to `1e-8 + 1e-6·mse`.
    pub fn identity_holds(&self) -> bool {
        (self.mse - (self.bias * self.bias + self.variance)).abs() <= 1e-8 + 1e-6 * self.mse
    }
}

pub fn bias_variance_mse(estimates: &CateEstimates, truth: &[f64]) -> Result<MethodReport> {
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates vs {} true effects",
            estimates.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::InvalidData("need at least two units".into()));
    }
    let n = truth.len() as f64;
    let errors: Vec<f64> = estimates.tau_hat.iter().zip(truth).map(|(e, t)| e - t).collect();
    let mean = errors.iter().sum::<f64>() / n;
    let variance = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    Ok(MethodReport {
        method: estimates.method.clone(),
        bias: mean.abs(),
        variance,
        mse,
    })
}

/// Cell of the minority × female × income-half partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgroupKey {
    pub minority: bool,
    pub female: bool,
    /// Income above the sample median.
    pub high_income: bool,
}

impl SubgroupKey {
    /// The eight cells, minority/female/high first.
    pub fn all() -> Vec<SubgroupKey> {
        let mut out = Vec::with_capacity(8);
        for minority in [true, false] {
            for female in [true, false] {
                for high_income in [true, false] {
                    out.push(SubgroupKey {
                        minority,
                        female,
                        high_income,
                    });
                }
            }
        }
        out
    }

    pub fn income_label(&self) -> &'static str {
        if self.high_income {
            "high"
        } else {
            "low"
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}, {}, {} income",
            if self.minority { "minority" } else { "non-minority" },
            if self.female { "female" } else { "male" },
            self.income_label()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    pub key: SubgroupKey,
    pub n: usize,
    pub true_mean: f64,
    /// Mean estimate per method, in report method order.
    pub estimate_means: Vec<f64>,
    /// Signed `estimate mean − true mean` per method.
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupReport {
    pub methods: Vec<String>,
    pub rows: Vec<SubgroupRow>,
    /// Mean over rows of |bias|, per method.
    pub mean_abs_bias: Vec<f64>,
}

impl SubgroupReport {
    pub fn row(&self, key: SubgroupKey) -> Option<&SubgroupRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn method_index(&self, method: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }
}

/// Subgroup of every unit, splitting income at its sample median.
pub fn subgroup_keys(dataset: &Dataset) -> Result<Vec<SubgroupKey>> {
    let income = dataset.column(INCOME)?;
    let minority = dataset.column(MINORITY)?;
    let female = dataset.column(FEMALE)?;
    let med = median(&income);
    Ok((0..dataset.len())
        .map(|i| SubgroupKey {
            minority: minority[i] == 1.0,
            female: female[i] == 1.0,
            high_income: income[i] > med,
        })
        .collect())
}

pub fn subgroup_report(
    dataset: &Dataset,
    truth: &[f64],
    estimates: &[CateEstimates],
) -> Result<SubgroupReport> {
    let n = dataset.len();
    if truth.len() != n || estimates.iter().any(|e| e.len() != n) {
        return Err(Error::DimensionMismatch("subgroup inputs must have one value per unit".into()));
    }
    let keys = subgroup_keys(dataset)?;
    let mut rows = Vec::with_capacity(8);
    for key in SubgroupKey::all() {
        let members: Vec<usize> = (0..n).filter(|&i| keys[i] == key).collect();
        if members.is_empty() {
            return Err(Error::EmptySubgroup(key.label()));
        }
        let mean = |v: &[f64]| members.iter().map(|&i| v[i]).sum::<f64>() / members.len() as f64;
        let true_mean = mean(truth);
        let estimate_means: Vec<f64> = estimates.iter().map(|e| mean(&e.tau_hat)).collect();
        let biases = estimate_means.iter().map(|m| m - true_mean).collect();
        rows.push(SubgroupRow {
            key,
            n: members.len(),
            true_mean,
            estimate_means,
            biases,
        });
    }
    let mean_abs_bias = (0..estimates.len())
        .map(|j| rows.iter().map(|r| r.biases[j].abs()).sum::<f64>() / rows.len() as f64)
        .collect();
    Ok(SubgroupReport {
        methods: estimates.iter().map(|e| e.method.clone()).collect(),
        rows,
        mean_abs_bias,
    })
}

fn critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level {level} is not in (0, 1)")));
    }
    Ok(Normal::standard().inverse_cdf(0.5 + level / 2.0))
}

fn standard_errors(estimates: &CateEstimates) -> Result<&[f64]> {
    let se = estimates.se.as_deref().ok_or_else(|| {
        Error::InvalidData(format!("{} estimates carry no standard errors", estimates.method))
    })?;
    if let Some(i) = se.iter().position(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::InvalidData(format!("standard error at unit {i} is {}", se[i])));
    }
    Ok(se)
}

/// Share of units whose true effect lies in `τ̂ ± z·se`.
pub fn coverage(estimates: &CateEstimates, truth: &[f64], level: f64) -> Result<f64> {
    let se = standard_errors(estimates)?;
    if truth.len() != estimates.len() || se.len() != estimates.len() {
        return Err(Error::DimensionMismatch("coverage inputs differ in length".into()));
    }
    let z = critical_value(level)?;
    let hits = estimates
        .tau_hat
        .iter()
        .zip(se)
        .zip(truth)
        .filter(|((t, s), tau)| (*tau - *t).abs() <= z * *s)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Full interval widths `2·z·se`.
pub fn interval_widths(estimates: &CateEstimates, level: f64) -> Result<Vec<f64>> {
    let z = critical_value(level)?;
    Ok(standard_errors(estimates)?.iter().map(|s| 2.0 * z * s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapDiagnostic {
    pub min: f64,
    pub max: f64,
    pub epsilon: f64,
    /// Entries outside `[ε, 1 − ε]`.
    pub violations: usize,
    pub n: usize,
}

impl OverlapDiagnostic {
    pub fn violation_fraction(&self) -> f64 {
        self.violations as f64 / self.n.max(1) as f64
    }
}

pub fn overlap_check(propensities: &[f64], epsilon: f64) -> OverlapDiagnostic {
    let (min, max) = propensities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    OverlapDiagnostic {
        min,
        max,
        epsilon,
        violations: propensities
            .iter()
            .filter(|&&p| p < epsilon || p > 1.0 - epsilon)
            .count(),
        n: propensities.len(),
    }
}

/// Left-aligned markdown table with padded columns.
pub fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].chars().count())
                .chain([header[j].chars().count(), 3])
                .max()
                .unwrap_or(3)
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(&widths) {
            s.push_str(&format!(" {c:<w$} |"));
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    out.push('|');
    for w in &widths {
        out.push_str(&format!("{}|", "-".repeat(w + 2)));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

/// A method's report within one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub report: MethodReport,
}

const TABLE2_HEADER: [&str; 5] = ["scenario", "method", "bias", "variance", "mse"];

pub fn write_table2_csv(path: &Path, rows: &[ScenarioReport]) -> Result<()> {
    write_csv_atomic(
        path,
        &TABLE2_HEADER,
        rows.iter().map(|r| {
            [
                r.scenario.clone(),
                r.report.method.clone(),
                r.report.bias.to_string(),
                r.report.variance.to_string(),
                r.report.mse.to_string(),
            ]
        }),
    )
}

pub fn table2_markdown(rows: &[ScenarioReport]) -> String {
    let header: Vec<String> = TABLE2_HEADER.iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.report.method.clone(),
                fmt3(r.report.bias),
                fmt3(r.report.variance),
                fmt3(r.report.mse),
            ]
        })
        .collect();
    markdown_table(&header, &body)
}

fn table3_header(report: &SubgroupReport) -> Vec<String> {
    let mut h: Vec<String> = ["minority", "female", "income", "n", "true_mean"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in &report.methods {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_bias"));
    }
    h
}

fn table3_rows(report: &SubgroupReport, fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![
                u8::from(r.key.minority).to_string(),
                u8::from(r.key.female).to_string(),
                r.key.income_label().to_string(),
                r.n.to_string(),
                fmt(r.true_mean),
            ];
            for (m, b) in r.estimate_means.iter().zip(&r.biases) {
                v.push(fmt(*m));
                v.push(fmt(*b));
            }
            v
        })
        .collect();
    let mut footer = vec![
        "mean_absolute_bias".to_string(),
        String::new(),
        String::new(),
        report.rows.iter().map(|r| r.n).sum::<usize>().to_string(),
        String::new(),
    ];
    for mab in &report.mean_abs_bias {
        footer.push(String::new());
        footer.push(fmt(*mab));
    }
    rows.push(footer);
    rows
}

/// Eight subgroup rows followed by a `mean_absolute_bias` footer line.
pub fn write_table3_csv(path: &Path, report: &SubgroupReport) -> Result<()> {
    let header = table3_header(report);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv_atomic(path, &header, table3_rows(report, |v| v.to_string()))
}

pub fn table3_markdown(report: &SubgroupReport) -> String {
    markdown_table(&table3_header(report), &table3_rows(report, fmt3))
}

/// Writes `scatter_<method>.csv` per method, `importance.csv` (when given)
/// and `subgroups.csv` into `dir`. Returns the written paths.
pub fn emit_figure_data(
    dir: &Path,
    truth: &[f64],
    estimates: &[CateEstimates],
    importance: Option<&[(String, f64)]>,
    subgroups: &SubgroupReport,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for e in estimates {
        if e.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!("{} has the wrong length", e.method)));
        }
        let path = dir.join(format!("scatter_{}.csv", e.method));
        let rows = (0..truth.len()).map(|i| [i.to_string(), truth[i].to_string(), e.tau_hat[i].to_string()]);
        write_csv_atomic(&path, &["unit_id", "tau_true", "tau_hat"], rows)?;
        written.push(path);
    }
    if let Some(imp) = importance {
        let path = dir.join("importance.csv");
        write_csv_atomic(
            &path,
            &["feature", "importance"],
            imp.iter().map(|(f, w)| [f.clone(), w.to_string()]),
        )?;
        written.push(path);
    }
    let path = dir.join("subgroups.csv");
    let mut header = vec!["subgroup".to_string(), "true_mean".to_string()];
    header.extend(subgroups.methods.iter().cloned());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv_atomic(
        &path,
        &header,
        subgroups.rows.iter().map(|r| {
            std::iter::once(r.key.label())
                .chain(std::iter::once(r.true_mean.to_string()))
                .chain(r.estimate_means.iter().map(|m| m.to_string()))
                .collect::<Vec<_>>()
        }),
    )?;
    written.push(path);
    Ok(written)
}

/// Writes a markdown document atomically.
pub fn write_markdown(path: &Path, body: &str) -> Result<()> {
    write_atomic(path, body.as_bytes())
}
