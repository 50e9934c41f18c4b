//! Which covariates does the forest split on? Depth-weighted split
//! shares, normalized to sum to one.
//!
//!     cargo run --release --example variable_importance

use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::forest::{grow, ForestParams};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for kind in [ScenarioKind::Linear, ScenarioKind::ComplexNonlinear] {
        let (data, _) = dgp::generate(&ScenarioSpec::new(kind, 1000, 42))?;
        let forest = grow(&data, &ForestParams::default().with_trees(200).with_seed(3))?;
        let mut imp = forest.variable_importance();
        imp.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("{}", kind.as_str());
        for (name, w) in imp {
            println!("    {name:<14} {w:.3} {}", "#".repeat((w * 50.0).round() as usize));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
