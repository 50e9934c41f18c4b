//! Runs a chosen set of estimators on one dataset with shared seeds and
//! shared cross-fitting folds, and scores them when the truth is known.

use serde::Serialize;

use crate::crossfit::CrossFitPlan;
use crate::data::Dataset;
use crate::dgp::GroundTruth;
use crate::error::{Error, Result};
use crate::estimates::CateEstimates;
use crate::eval::{self, MethodReport, OverlapDiagnostic, SubgroupReport, OVERLAP_EPSILON};
use crate::forest::{self, ForestModel, ForestParams};
use crate::interaction::{self, DesignSpec, LinearModel};
use crate::metalearners::{self, LearnerConfig, Method, Nuisances};
use crate::seed;

const FOREST_STREAM: u64 = 100;
const LEARNER_STREAM: u64 = 200;

/// Estimator settings shared by every method in a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub forest: ForestParams,
    pub learners: LearnerConfig,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(seed: u64) -> Self {
        EstimatorConfig {
            forest: ForestParams::default(),
            learners: LearnerConfig::default(),
            seed,
        }
    }

    /// The forest params with the run's derived forest seed.
    pub fn seeded_forest(&self) -> ForestParams {
        ForestParams {
            seed: seed::derive(self.seed, &[FOREST_STREAM]),
            ..self.forest
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationOutput {
    /// One entry per requested method, in request order.
    pub estimates: Vec<CateEstimates>,
    pub ols: Option<LinearModel>,
    pub forest: Option<ForestModel>,
    pub nuisances: Option<Nuisances>,
    /// Mean doubly robust score, when the DR learner ran.
    pub dr_ate: Option<f64>,
}

impl EstimationOutput {
    pub fn get(&self, method: &str) -> Option<&CateEstimates> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

/// Method name carried by the estimates each [`Method`] produces.
pub fn estimate_name(method: Method) -> &'static str {
    match method {
        Method::Ols => "ols",
        Method::CausalForest => "causal_forest",
        Method::S => "s_learner",
        Method::T => "t_learner",
        Method::X => "x_learner",
        Method::R => "r_learner",
        Method::Dr => "dr_learner",
    }
}

/// Fits every method in `methods` on `dataset`. Forest estimates for the
/// training units are out-of-bag.
pub fn estimate(dataset: &Dataset, methods: &[Method], config: &EstimatorConfig) -> Result<EstimationOutput> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let mut out = EstimationOutput {
        estimates: Vec::with_capacity(methods.len()),
        ols: None,
        forest: None,
        nuisances: None,
        dr_ate: None,
    };
    let learner_seed = seed::derive(config.seed, &[LEARNER_STREAM]);
    let lc = &config.learners;
    let needs_nuisance = methods.iter().any(|m| matches!(m, Method::X | Method::R | Method::Dr));
    if needs_nuisance {
        let plan = CrossFitPlan::new(dataset, lc.folds, seed::derive(learner_seed, &[0]))?;
        out.nuisances = Some(
            metalearners::fit_nuisances(
                dataset,
                &plan,
                &lc.nuisance_oracle,
                &lc.nuisance_oracle,
                seed::derive(learner_seed, &[1]),
            )
            .map_err(|e| e.context("cross-fitted nuisances"))?,
        );
    }
    for &m in methods {
        let s = seed::derive(learner_seed, &[10 + m as u64]);
        let est = match m {
            Method::Ols => {
                let model = interaction::fit_dataset(dataset, &DesignSpec::saturated(dataset.names()))
                    .map_err(|e| e.context("OLS interaction model"))?;
                let tau = model.predict_dataset(dataset)?;
                out.ols = Some(model);
                CateEstimates::new(estimate_name(m), tau)
            }
            Method::CausalForest => {
                let model = forest::grow(dataset, &config.seeded_forest())
                    .map_err(|e| e.context("causal forest"))?;
                let mut est = model.predict_oob(dataset)?;
                est.method = estimate_name(m).to_string();
                out.forest = Some(model);
                est
            }
            Method::S => metalearners::s_learner(dataset, &lc.oracle, &lc.s_interactions, s)?,
            Method::T => metalearners::t_learner(dataset, &lc.oracle, s)?,
            Method::X => {
                let nu = out.nuisances.as_ref().expect("nuisances fitted");
                metalearners::x_learner(dataset, &lc.oracle, &nu.e_hat, s)?
            }
            Method::R => {
                let nu = out.nuisances.as_ref().expect("nuisances fitted");
                metalearners::r_learner(dataset, &nu.m_hat, &nu.e_hat, &lc.oracle, s)?
            }
            Method::Dr => {
                let nu = out.nuisances.as_ref().expect("nuisances fitted");
                let dr = metalearners::dr_learner(dataset, &nu.m0_hat, &nu.m1_hat, &nu.e_hat, &lc.oracle, s)?;
                out.dr_ate = Some(dr.ate);
                dr.estimates
            }
        };
        out.estimates.push(est);
    }
    Ok(out)
}

/// Everything computed against ground truth for one scenario run.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioEvaluation {
    pub scenario: String,
    pub n: usize,
    pub true_ate: f64,
    pub reports: Vec<MethodReport>,
    pub subgroups: SubgroupReport,
    /// Forest interval coverage of the true CATE at 95%.
    pub coverage: Option<f64>,
    pub median_interval_width: Option<f64>,
    pub true_propensity_overlap: OverlapDiagnostic,
    pub estimated_propensity_overlap: Option<OverlapDiagnostic>,
    pub importance: Option<Vec<(String, f64)>>,
    pub dr_ate: Option<f64>,
}

pub fn evaluate(
    scenario: &str,
    dataset: &Dataset,
    truth: &GroundTruth,
    output: &EstimationOutput,
) -> Result<ScenarioEvaluation> {
    let reports = output
        .estimates
        .iter()
        .map(|e| eval::bias_variance_mse(e, &truth.tau_true))
        .collect::<Result<Vec<_>>>()?;
    let subgroups = eval::subgroup_report(dataset, &truth.tau_true, &output.estimates)?;
    let forest_est = output.get(estimate_name(Method::CausalForest)).filter(|e| e.se.is_some());
    let coverage = forest_est
        .map(|e| eval::coverage(e, &truth.tau_true, 0.95))
        .transpose()?;
    let median_interval_width = forest_est
        .map(|e| eval::interval_widths(e, 0.95).map(|w| crate::dgp::median(&w)))
        .transpose()?;
    Ok(ScenarioEvaluation {
        scenario: scenario.to_string(),
        n: dataset.len(),
        true_ate: truth.ate(),
        reports,
        subgroups,
        coverage,
        median_interval_width,
        true_propensity_overlap: eval::overlap_check(&truth.propensity, OVERLAP_EPSILON),
        estimated_propensity_overlap: output
            .forest
            .as_ref()
            .map(|f| eval::overlap_check(&f.e_hat_unclipped, OVERLAP_EPSILON)),
        importance: output.forest.as_ref().map(|f| f.variable_importance()),
        dr_ate: output.dr_ate,
    })
}
