//! OLS with treatment-by-covariate interactions.
//!
//! Column order of the design is `[intercept?, mains..., W, W×interactions...]`.
//! The CATE at a row is the difference of fitted values with W set to 1 and
//! to 0, i.e. `β_W + Σ β_{W×j} x_j`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{write_csv_atomic, Covariates, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub main_effects: Vec<String>,
    pub treatment_interactions: Vec<String>,
    #[serde(default = "yes")]
    pub include_intercept: bool,
}

fn yes() -> bool {
    true
}

impl DesignSpec {
    /// All main effects plus every treatment×covariate product.
    pub fn saturated(names: &[String]) -> Self {
        DesignSpec {
            main_effects: names.to_vec(),
            treatment_interactions: names.to_vec(),
            include_intercept: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, list) in [
            ("main effect", &self.main_effects),
            ("interaction", &self.treatment_interactions),
        ] {
            for (j, a) in list.iter().enumerate() {
                if list[..j].contains(a) {
                    return Err(Error::InvalidParameter(format!("duplicate {what} `{a}`")));
                }
            }
        }
        if let Some(x) = self
            .treatment_interactions
            .iter()
            .find(|x| !self.main_effects.contains(x))
        {
            return Err(Error::InvalidParameter(format!(
                "interaction `{x}` is not among the main effects"
            )));
        }
        Ok(())
    }

    pub fn num_terms(&self) -> usize {
        usize::from(self.include_intercept)
            + self.main_effects.len()
            + 1
            + self.treatment_interactions.len()
    }

    pub fn term_names(&self) -> Vec<String> {
        let mut t = Vec::with_capacity(self.num_terms());
        if self.include_intercept {
            t.push("(intercept)".to_string());
        }
        t.extend(self.main_effects.iter().cloned());
        t.push("W".to_string());
        t.extend(self.treatment_interactions.iter().map(|x| format!("W:{x}")));
        t
    }

    fn design_row(&self, values: &[f64], w: f64, out: &mut Vec<f64>) {
        if self.include_intercept {
            out.push(1.0);
        }
        let k = self.main_effects.len();
        out.extend_from_slice(&values[..k]);
        out.push(w);
        for &v in &values[k..] {
            out.push(w * v);
        }
    }

    /// Covariate values for a row in (mains..., interactions...) order.
    fn gather<C: Covariates + ?Sized>(&self, row: &C) -> Result<Vec<f64>> {
        self.main_effects
            .iter()
            .chain(&self.treatment_interactions)
            .map(|n| row.require(n))
            .collect()
    }
}

/// Builds the regression design for `dataset` under `spec`.
pub fn build_design(dataset: &Dataset, spec: &DesignSpec) -> Result<Matrix> {
    spec.validate()?;
    let idx = spec
        .main_effects
        .iter()
        .chain(&spec.treatment_interactions)
        .map(|n| dataset.column_index(n))
        .collect::<Result<Vec<_>>>()?;
    let n = dataset.len();
    let mut data = Vec::with_capacity(n * spec.num_terms());
    let mut vals = vec![0.0; idx.len()];
    for i in 0..n {
        let row = dataset.covariates().row(i);
        for (v, &j) in vals.iter_mut().zip(&idx) {
            *v = row[j];
        }
        spec.design_row(&vals, f64::from(dataset.treatment()[i]), &mut data);
    }
    Matrix::from_row_major(n, spec.num_terms(), data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub design: DesignSpec,
    pub residual_variance: f64,
}

/// Least-squares fit of `y` on `design` columns named by `spec`.
pub fn fit_ols(design: &Matrix, y: &[f64], spec: &DesignSpec) -> Result<LinearModel> {
    let terms = spec.term_names();
    if design.ncols() != terms.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} columns, spec names {}",
            design.ncols(),
            terms.len()
        )));
    }
    let coefficients = solve(design, y, &terms)?;
    let fitted = design.mat_vec(&coefficients);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let dof = (design.nrows() - design.ncols()).max(1);
    Ok(LinearModel {
        terms,
        coefficients,
        design: spec.clone(),
        residual_variance: rss / dof as f64,
    })
}

/// Plain least squares with descriptive errors; `terms` names the columns.
pub fn solve(design: &Matrix, y: &[f64], terms: &[String]) -> Result<Vec<f64>> {
    if design.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, outcome has {}",
            design.nrows(),
            y.len()
        )));
    }
    if design.nrows() < design.ncols() {
        return Err(Error::InvalidData(format!(
            "{} rows cannot identify {} coefficients",
            design.nrows(),
            design.ncols()
        )));
    }
    let beta = linalg::lstsq(design, y).map_err(|cols| Error::RankDeficient {
        columns: cols
            .into_iter()
            .map(|j| terms.get(j).cloned().unwrap_or_else(|| format!("#{j}")))
            .collect(),
    })?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidData("non-finite coefficient".into()));
    }
    Ok(beta)
}

/// Fits the interaction model to a dataset in one step.
pub fn fit_dataset(dataset: &Dataset, spec: &DesignSpec) -> Result<LinearModel> {
    let design = build_design(dataset, spec)?;
    fit_ols(&design, dataset.outcome(), spec)
}

impl LinearModel {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|j| self.coefficients[j])
    }

    /// Fitted value at `row` with treatment `w`.
    pub fn fitted<C: Covariates + ?Sized>(&self, row: &C, w: f64) -> Result<f64> {
        let vals = self.design.gather(row)?;
        let mut x = Vec::with_capacity(self.coefficients.len());
        self.design.design_row(&vals, w, &mut x);
        Ok(linalg::dot(&x, &self.coefficients))
    }

    /// fitted(W=1) − fitted(W=0), evaluated as `β_W + Σ β_{W×j} x_j`.
    pub fn predict_cate<C: Covariates + ?Sized>(&self, row: &C) -> Result<f64> {
        let off = usize::from(self.design.include_intercept) + self.design.main_effects.len();
        let mut tau = self.coefficients[off];
        for (k, name) in self.design.treatment_interactions.iter().enumerate() {
            tau += self.coefficients[off + 1 + k] * row.require(name)?;
        }
        Ok(tau)
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        (0..dataset.len())
            .map(|i| self.predict_cate(&dataset.row(i)))
            .collect()
    }

    /// Two-column (term, value) CSV.
    pub fn write_coefficients_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, v)| [t.clone(), v.to_string()]);
        write_csv_atomic(path, &["term", "value"], rows)
    }
}
