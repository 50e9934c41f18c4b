//! S, T, X, R and DR meta-learners over a pluggable regression oracle.
//!
//! Notation: `μ̂(w, x)` pooled outcome model, `μ̂₀`, `μ̂₁` per-arm outcome
//! models, `m̂(x) = E[Y|X]`, `ê(x) = E[W|X]`.

use serde::{Deserialize, Serialize};

use crate::crossfit::CrossFitPlan;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimates::CateEstimates;
use crate::forest::{RegressionForest, RegressionForestParams, PROPENSITY_CLIP};
use crate::linalg::{self, Matrix};
use crate::seed;

/// Residual-treatment floor below which the R-learner drops a unit.
pub const R_LEARNER_FLOOR: f64 = 0.01;

/// Something that can be fit to (features, targets, weights) and predict.
pub trait RegressionOracle: Sync {
    fn name(&self) -> String;

    fn fit(
        &self,
        x: &Matrix,
        y: &[f64],
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<Box<dyn FittedRegression>>;
}

pub trait FittedRegression: Send + Sync {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>>;
}

/// Least squares with an unpenalized intercept and optional ridge penalty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearOracle {
    #[serde(default)]
    pub ridge: f64,
}

struct FittedLinear {
    coefficients: Vec<f64>,
}

impl FittedRegression for FittedLinear {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() + 1 != self.coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "linear model has {} features, got {}",
                self.coefficients.len() - 1,
                x.ncols()
            )));
        }
        let (b0, b) = self.coefficients.split_first().expect("intercept");
        Ok((0..x.nrows()).map(|i| b0 + linalg::dot(x.row(i), b)).collect())
    }
}

impl RegressionOracle for LinearOracle {
    fn name(&self) -> String {
        if self.ridge > 0.0 {
            format!("ridge(λ={})", self.ridge)
        } else {
            "linear".to_string()
        }
    }

    fn fit(
        &self,
        x: &Matrix,
        y: &[f64],
        weights: Option<&[f64]>,
        _seed: u64,
    ) -> Result<Box<dyn FittedRegression>> {
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch("features and targets differ in length".into()));
        }
        let design = Matrix::from_row_major(
            x.nrows(),
            x.ncols() + 1,
            (0..x.nrows())
                .flat_map(|i| std::iter::once(1.0).chain(x.row(i).iter().copied()))
                .collect(),
        )?;
        if self.ridge == 0.0 && design.nrows() < design.ncols() {
            return Err(Error::InvalidData(format!(
                "{} rows cannot identify {} coefficients",
                design.nrows(),
                design.ncols()
            )));
        }
        let coefficients = linalg::weighted_ridge(&design, y, weights, self.ridge, &[0])
            .map_err(|cols| Error::RankDeficient {
                columns: cols
                    .into_iter()
                    .map(|j| if j == 0 { "(intercept)".to_string() } else { format!("x{}", j - 1) })
                    .collect(),
            })?;
        Ok(Box::new(FittedLinear { coefficients }))
    }
}

/// Honest regression forest; the `seed` field of the params is replaced by
/// the seed passed to `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForestOracle {
    #[serde(flatten)]
    pub params: RegressionForestParams,
}

impl FittedRegression for RegressionForest {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        RegressionForest::predict(self, x)
    }
}

impl RegressionOracle for ForestOracle {
    fn name(&self) -> String {
        "forest".to_string()
    }

    fn fit(
        &self,
        x: &Matrix,
        y: &[f64],
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<Box<dyn FittedRegression>> {
        let params = RegressionForestParams { seed, ..self.params };
        Ok(Box::new(RegressionForest::fit(x, y, weights, &params)?))
    }
}

/// Serializable oracle choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleConfig {
    Linear(LinearOracle),
    Forest(ForestOracle),
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig::Forest(ForestOracle::default())
    }
}

impl RegressionOracle for OracleConfig {
    fn name(&self) -> String {
        match self {
            OracleConfig::Linear(o) => o.name(),
            OracleConfig::Forest(o) => o.name(),
        }
    }

    fn fit(
        &self,
        x: &Matrix,
        y: &[f64],
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<Box<dyn FittedRegression>> {
        match self {
            OracleConfig::Linear(o) => o.fit(x, y, weights, seed),
            OracleConfig::Forest(o) => o.fit(x, y, weights, seed),
        }
    }
}

fn check_finite(method: &str, tau: &[f64]) -> Result<()> {
    match tau.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidData(format!("{method}: non-finite estimate at unit {i}"))),
        None => Ok(()),
    }
}

fn arms(dataset: &Dataset) -> (Vec<usize>, Vec<usize>) {
    (0..dataset.len()).partition(|&i| dataset.treatment()[i] == 0)
}

fn fit_on(
    oracle: &dyn RegressionOracle,
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    seed: u64,
    what: &str,
) -> Result<Box<dyn FittedRegression>> {
    let xs = x.select_rows(rows);
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    oracle
        .fit(&xs, &ys, None, seed)
        .map_err(|e| e.context(format!("fitting {what} with {} oracle", oracle.name())))
}

fn s_features(x: &Matrix, w: &[f64], interactions: &[usize]) -> Matrix {
    x.hstack_with(1 + interactions.len(), |i, row, out| {
        out.push(w[i]);
        out.extend(interactions.iter().map(|&j| w[i] * row[j]));
    })
}

/// Single pooled model `μ̂(W, X)`; `τ̂(x) = μ̂(1, x) − μ̂(0, x)`.
///
/// `interactions` names covariates whose product with W is added as an
/// extra feature (useful with linear oracles, which otherwise force a
/// constant effect).
pub fn s_learner(
    dataset: &Dataset,
    oracle: &dyn RegressionOracle,
    interactions: &[String],
    seed: u64,
) -> Result<CateEstimates> {
    let (control, treated) = arms(dataset);
    if control.is_empty() || treated.is_empty() {
        return Err(Error::InvalidData("S-learner needs both treatment arms".into()));
    }
    let idx = interactions
        .iter()
        .map(|n| dataset.column_index(n))
        .collect::<Result<Vec<_>>>()?;
    let x = dataset.covariates();
    let w = dataset.treatment_f64();
    let model = oracle
        .fit(&s_features(x, &w, &idx), dataset.outcome(), None, seed)
        .map_err(|e| e.context("S-learner outcome model"))?;
    let n = dataset.len();
    let mu1 = model.predict(&s_features(x, &vec![1.0; n], &idx))?;
    let mu0 = model.predict(&s_features(x, &vec![0.0; n], &idx))?;
    let tau: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
    check_finite("S-learner", &tau)?;
    Ok(CateEstimates::new("s_learner", tau))
}

/// Per-arm models fit on all units of each arm, predicted for everyone.
fn per_arm_models(
    dataset: &Dataset,
    oracle: &dyn RegressionOracle,
    seed: u64,
    min_arm: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (control, treated) = arms(dataset);
    if control.len() < min_arm || treated.len() < min_arm {
        return Err(Error::InvalidData(format!(
            "each treatment arm needs at least {min_arm} units (control {}, treated {})",
            control.len(),
            treated.len()
        )));
    }
    let x = dataset.covariates();
    let y = dataset.outcome();
    let m0 = fit_on(oracle, x, y, &control, seed::derive(seed, &[0]), "control outcome model")?;
    let m1 = fit_on(oracle, x, y, &treated, seed::derive(seed, &[1]), "treated outcome model")?;
    Ok((m0.predict(x)?, m1.predict(x)?))
}

/// Separate arm models; `τ̂(x) = μ̂₁(x) − μ̂₀(x)`.
pub fn t_learner(dataset: &Dataset, oracle: &dyn RegressionOracle, seed: u64) -> Result<CateEstimates> {
    let (mu0, mu1) = per_arm_models(dataset, oracle, seed, 10)?;
    let tau: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
    check_finite("T-learner", &tau)?;
    Ok(CateEstimates::new("t_learner", tau))
}

/// Two-stage imputation learner combined with propensity weights:
/// `τ̂(x) = ê(x)·τ̂₀(x) + (1 − ê(x))·τ̂₁(x)`.
pub fn x_learner(
    dataset: &Dataset,
    oracle: &dyn RegressionOracle,
    e_hat: &[f64],
    seed: u64,
) -> Result<CateEstimates> {
    if e_hat.len() != dataset.len() {
        return Err(Error::DimensionMismatch("e_hat must have one entry per unit".into()));
    }
    if let Some(i) = e_hat.iter().position(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidData(format!(
            "X-learner: e_hat[{i}] = {} is not in (0, 1)",
            e_hat[i]
        )));
    }
    let (mu0, mu1) = per_arm_models(dataset, oracle, seed, 10)?;
    let (control, treated) = arms(dataset);
    let y = dataset.outcome();
    // imputed effects: treated Y − μ̂₀, control μ̂₁ − Y
    let mut imputed = vec![0.0; dataset.len()];
    for &i in &treated {
        imputed[i] = y[i] - mu0[i];
    }
    for &i in &control {
        imputed[i] = mu1[i] - y[i];
    }
    let x = dataset.covariates();
    let tau1 = fit_on(oracle, x, &imputed, &treated, seed::derive(seed, &[2]), "treated effect model")?
        .predict(x)?;
    let tau0 = fit_on(oracle, x, &imputed, &control, seed::derive(seed, &[3]), "control effect model")?
        .predict(x)?;
    let tau: Vec<f64> = (0..dataset.len())
        .map(|i| e_hat[i] * tau0[i] + (1.0 - e_hat[i]) * tau1[i])
        .collect();
    check_finite("X-learner", &tau)?;
    Ok(CateEstimates::new("x_learner", tau))
}

/// Minimizes `Σ (Yᵢ − m̂ᵢ − (Wᵢ − êᵢ) τ(Xᵢ))²` over the oracle's class by a
/// weighted regression of `(Yᵢ − m̂ᵢ)/(Wᵢ − êᵢ)` on `Xᵢ` with weights
/// `(Wᵢ − êᵢ)²`.
pub fn r_learner(
    dataset: &Dataset,
    m_hat: &[f64],
    e_hat: &[f64],
    tau_oracle: &dyn RegressionOracle,
    seed: u64,
) -> Result<CateEstimates> {
    let n = dataset.len();
    if m_hat.len() != n || e_hat.len() != n {
        return Err(Error::DimensionMismatch("nuisance vectors must have length n".into()));
    }
    let w = dataset.treatment_f64();
    let y = dataset.outcome();
    let mut keep = Vec::new();
    let mut pseudo = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        let wr = w[i] - e_hat[i];
        if wr.abs() < R_LEARNER_FLOOR {
            continue;
        }
        keep.push(i);
        pseudo.push((y[i] - m_hat[i]) / wr);
        weights.push(wr * wr);
    }
    if keep.is_empty() || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidData(
            "R-learner: every unit has |W − ê| below the floor".into(),
        ));
    }
    let x = dataset.covariates();
    let model = tau_oracle
        .fit(&x.select_rows(&keep), &pseudo, Some(&weights), seed)
        .map_err(|e| e.context("R-learner effect model"))?;
    let tau = model.predict(x)?;
    check_finite("R-learner", &tau)?;
    Ok(CateEstimates::new("r_learner", tau))
}

/// Doubly robust learner output.
#[derive(Debug, Clone, PartialEq)]
pub struct DrResult {
    pub estimates: CateEstimates,
    /// Mean of the per-unit scores.
    pub ate: f64,
    pub scores: Vec<f64>,
}

/// Per-unit doubly robust scores
/// `Γ̂ = μ̂₁ − μ̂₀ + W(Y − μ̂₁)/ê − (1 − W)(Y − μ̂₀)/(1 − ê)`.
pub fn dr_scores(dataset: &Dataset, m0_hat: &[f64], m1_hat: &[f64], e_hat: &[f64]) -> Result<Vec<f64>> {
    let n = dataset.len();
    if m0_hat.len() != n || m1_hat.len() != n || e_hat.len() != n {
        return Err(Error::DimensionMismatch("nuisance vectors must have length n".into()));
    }
    if let Some(i) = e_hat.iter().position(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidData(format!(
            "DR-learner: e_hat[{i}] = {} is not in (0, 1)",
            e_hat[i]
        )));
    }
    let y = dataset.outcome();
    Ok((0..n)
        .map(|i| {
            let e = e_hat[i].clamp(PROPENSITY_CLIP.0, PROPENSITY_CLIP.1);
            let w = f64::from(dataset.treatment()[i]);
            m1_hat[i] - m0_hat[i] + w * (y[i] - m1_hat[i]) / e
                - (1.0 - w) * (y[i] - m0_hat[i]) / (1.0 - e)
        })
        .collect())
}

/// Regresses doubly robust scores on X.
pub fn dr_learner(
    dataset: &Dataset,
    m0_hat: &[f64],
    m1_hat: &[f64],
    e_hat: &[f64],
    tau_oracle: &dyn RegressionOracle,
    seed: u64,
) -> Result<DrResult> {
    let scores = dr_scores(dataset, m0_hat, m1_hat, e_hat)?;
    let ate = scores.iter().sum::<f64>() / scores.len() as f64;
    let x = dataset.covariates();
    let model = tau_oracle
        .fit(x, &scores, None, seed)
        .map_err(|e| e.context("DR-learner effect model"))?;
    let tau = model.predict(x)?;
    check_finite("DR-learner", &tau)?;
    Ok(DrResult {
        estimates: CateEstimates::new("dr_learner", tau),
        ate,
        scores,
    })
}

/// Out-of-fold predictions of `target` on X, using only `rows_filter`
/// units from the training folds.
pub fn cross_fit_predict(
    dataset: &Dataset,
    plan: &CrossFitPlan,
    oracle: &dyn RegressionOracle,
    target: &[f64],
    rows_filter: impl Fn(usize) -> bool,
    seed: u64,
) -> Result<Vec<f64>> {
    if plan.len() != dataset.len() || target.len() != dataset.len() {
        return Err(Error::DimensionMismatch("cross-fit plan, target and dataset differ".into()));
    }
    let x = dataset.covariates();
    let mut out = vec![f64::NAN; dataset.len()];
    for f in 0..plan.k {
        let (train, held) = plan.split(f);
        let train: Vec<usize> = train.into_iter().filter(|&i| rows_filter(i)).collect();
        if train.is_empty() {
            return Err(Error::SingleClassFold { fold: f });
        }
        let model = fit_on(oracle, x, target, &train, seed::derive(seed, &[f as u64]), "nuisance model")?;
        let pred = model.predict(&x.select_rows(&held))?;
        for (j, &i) in held.iter().enumerate() {
            out[i] = pred[j];
        }
    }
    Ok(out)
}

/// Cross-fitted nuisance functions shared by the R-, X- and DR-learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nuisances {
    pub m_hat: Vec<f64>,
    pub e_hat: Vec<f64>,
    pub m0_hat: Vec<f64>,
    pub m1_hat: Vec<f64>,
}

pub fn fit_nuisances(
    dataset: &Dataset,
    plan: &CrossFitPlan,
    outcome_oracle: &dyn RegressionOracle,
    propensity_oracle: &dyn RegressionOracle,
    seed: u64,
) -> Result<Nuisances> {
    plan.validate(dataset)?;
    let y = dataset.outcome();
    let w = dataset.treatment_f64();
    let t = dataset.treatment();
    let m_hat = cross_fit_predict(dataset, plan, outcome_oracle, y, |_| true, seed::derive(seed, &[10]))?;
    let e_hat = cross_fit_predict(dataset, plan, propensity_oracle, &w, |_| true, seed::derive(seed, &[11]))?
        .into_iter()
        .map(|e| e.clamp(PROPENSITY_CLIP.0, PROPENSITY_CLIP.1))
        .collect();
    let m0_hat = cross_fit_predict(dataset, plan, outcome_oracle, y, |i| t[i] == 0, seed::derive(seed, &[12]))?;
    let m1_hat = cross_fit_predict(dataset, plan, outcome_oracle, y, |i| t[i] == 1, seed::derive(seed, &[13]))?;
    Ok(Nuisances {
        m_hat,
        e_hat,
        m0_hat,
        m1_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    CausalForest,
    S,
    T,
    X,
    R,
    Dr,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Ols,
        Method::CausalForest,
        Method::S,
        Method::T,
        Method::X,
        Method::R,
        Method::Dr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::CausalForest => "causal_forest",
            Method::S => "s",
            Method::T => "t",
            Method::X => "x",
            Method::R => "r",
            Method::Dr => "dr",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s || (s == "cf" && *m == Method::CausalForest))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method `{s}` (expected ols, causal_forest, s, t, x, r, dr)"
                ))
            })
    }
}

/// Meta-learner configuration as stored in JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    /// Outcome/effect oracle for S/T/X and the R/DR effect stage.
    pub oracle: OracleConfig,
    /// Oracle for cross-fitted nuisances (m̂, ê, μ̂₀, μ̂₁).
    pub nuisance_oracle: OracleConfig,
    pub folds: usize,
    /// Covariates interacted with W in the S-learner.
    pub s_interactions: Vec<String>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            oracle: OracleConfig::default(),
            nuisance_oracle: OracleConfig::default(),
            folds: 5,
            s_interactions: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dr_score_residual_vanishes_when_mu1_equals_y() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let d = Dataset::new(vec!["x".into()], x, vec![1, 0], vec![3.0, 1.0]).unwrap();
        let s = dr_scores(&d, &[0.5, 0.5], &[3.0, 2.0], &[0.3, 0.3]).unwrap();
        assert_eq!(s[0], 3.0 - 0.5);
    }

    #[test]
    fn dr_rejects_propensity_outside_unit_interval() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let d = Dataset::new(vec!["x".into()], x, vec![1, 0], vec![3.0, 1.0]).unwrap();
        assert!(dr_scores(&d, &[0.0; 2], &[0.0; 2], &[1.0, 0.5]).is_err());
        assert!(dr_scores(&d, &[0.0; 2], &[0.0; 2], &[0.0, 0.5]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let j = serde_json::to_string(&m).unwrap();
            assert_eq!(j, format!("\"{}\"", m.as_str()));
        }
        assert!("q".parse::<Method>().is_err());
    }

    #[test]
    fn oracle_config_json() {
        let c: OracleConfig = serde_json::from_str(r#"{"kind": "linear", "ridge": 0.5}"#).unwrap();
        assert_eq!(c, OracleConfig::Linear(LinearOracle { ridge: 0.5 }));
        let c: OracleConfig = serde_json::from_str(r#"{"kind": "forest", "num_trees": 50}"#).unwrap();
        match c {
            OracleConfig::Forest(f) => assert_eq!(f.params.num_trees, 50),
            _ => panic!(),
        }
    }

    #[test]
    fn linear_oracle_weighted_fit() {
        // weights zero out the outlier
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [1.0, 3.0, 5.0, 100.0];
        let fit = LinearOracle::default()
            .fit(&x, &y, Some(&[1.0, 1.0, 1.0, 0.0]), 0)
            .unwrap();
        let p = fit.predict(&Matrix::from_rows(&[vec![10.0]]).unwrap()).unwrap();
        assert!((p[0] - 21.0).abs() < 1e-9);
    }
}
