//! S, T, X, R and DR learners sharing one set of cross-fitted nuisances.
//!
//!     cargo run --release --example meta_learners

use hetcate::crossfit::CrossFitPlan;
use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::eval::bias_variance_mse;
use hetcate::forest::RegressionForestParams;
use hetcate::metalearners::{
    dr_learner, fit_nuisances, r_learner, s_learner, t_learner, x_learner, ForestOracle, OracleConfig,
};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let (data, truth) = dgp::generate(&ScenarioSpec::new(ScenarioKind::ComplexNonlinear, 1000, 42))?;
    let oracle = ForestOracle {
        params: RegressionForestParams {
            num_trees: 100,
            ..Default::default()
        },
    };
    let nuisance = OracleConfig::Forest(oracle);

    let plan = CrossFitPlan::new(&data, 5, 1)?;
    let nu = fit_nuisances(&data, &plan, &nuisance, &nuisance, 2)?;

    let dr = dr_learner(&data, &nu.m0_hat, &nu.m1_hat, &nu.e_hat, &oracle, 3)?;
    let all = [
        s_learner(&data, &oracle, &[], 3)?,
        t_learner(&data, &oracle, 3)?,
        x_learner(&data, &oracle, &nu.e_hat, 3)?,
        r_learner(&data, &nu.m_hat, &nu.e_hat, &oracle, 3)?,
        dr.estimates,
    ];
    for est in &all {
        let r = bias_variance_mse(est, &truth.tau_true)?;
        println!("{:<12} mse {:.4}  bias {:.4}", est.method, r.mse, r.bias);
    }
    println!("doubly robust ATE {:.3} (sample ATE {:.3})", dr.ate, truth.ate());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
