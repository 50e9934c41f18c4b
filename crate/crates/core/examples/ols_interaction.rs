//! The interaction-model baseline: Y on covariates, W and W x covariate.
//!
//!     cargo run --release --example ols_interaction

use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::eval::bias_variance_mse;
use hetcate::interaction::{fit_dataset, DesignSpec};
use hetcate::CateEstimates;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for kind in [ScenarioKind::Linear, ScenarioKind::ComplexNonlinear] {
        let (data, truth) = dgp::generate(&ScenarioSpec::new(kind, 2000, 42))?;
        let model = fit_dataset(&data, &DesignSpec::saturated(data.names()))?;
        println!("{}", kind.as_str());
        for (term, b) in model.terms.iter().zip(&model.coefficients) {
            if term.starts_with("W") {
                println!("    {term:<16} {b:>8.3}");
            }
        }
        let tau = CateEstimates::new("ols", model.predict_dataset(&data)?);
        let r = bias_variance_mse(&tau, &truth.tau_true)?;
        println!("    mse {:.4}  bias {:.4}  variance {:.4}", r.mse, r.bias, r.variance);
    }
    // On the complex scenario the linear CATE cannot bend around the
    // 1(income > 0) and max(test_score, 0) terms, hence the large MSE.
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
