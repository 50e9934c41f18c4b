//! Bias/variance/MSE per scenario and the eight-cell subgroup table,
//! printed as markdown. The `hetcate replicate` command writes the same
//! tables to disk.
//!
//!     cargo run --release --example replicate_tables

use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::eval::{table2_markdown, table3_markdown, ScenarioReport};
use hetcate::metalearners::Method;
use hetcate::pipeline::{estimate, evaluate, EstimatorConfig};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = EstimatorConfig::new(42);
    config.forest = config.forest.with_trees(200);

    let mut rows = Vec::new();
    let mut complex = None;
    for kind in ScenarioKind::ALL {
        let (data, truth) = dgp::generate(&ScenarioSpec::new(kind, 1000, 42))?;
        let out = estimate(&data, &[Method::Ols, Method::CausalForest], &config)?;
        let eval = evaluate(kind.as_str(), &data, &truth, &out)?;
        rows.extend(eval.reports.iter().map(|r| ScenarioReport {
            scenario: kind.as_str().to_string(),
            report: r.clone(),
        }));
        if kind == ScenarioKind::ComplexNonlinear {
            complex = Some(eval);
        }
    }
    println!("{}", table2_markdown(&rows));
    let complex = complex.expect("complex scenario ran");
    println!("{}", table3_markdown(&complex.subgroups));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
