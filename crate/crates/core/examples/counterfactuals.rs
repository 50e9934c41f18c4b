//! Unit-level counterfactuals with the simulation's structural model:
//! abduct the noise, set W, and predict Y again.
//!
//!     cargo run --release --example counterfactuals
//!
//! Files go to $HETCATE_EXAMPLE_OUT, or a temp directory.

use std::path::{Path, PathBuf};

use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::eval::subgroup_keys;
use hetcate::scm::{
    unit_counterfactuals, unit_evidence, write_counterfactual_csv, Factor, Noise, StructuralModel, Term, Variable,
    OUTCOME, TREATMENT,
};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = StructuralModel::load_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/simulation_model.json"))?;
    let (data, truth) = dgp::generate(&ScenarioSpec::new(ScenarioKind::ComplexNonlinear, 2000, 42))?;

    let i = 0;
    let evidence = unit_evidence(&data, i);
    let noise = model.abduct(&evidence)?;
    println!("unit {i}: {evidence:?}");
    println!("    recovered u = {} (stored {})", noise["u"], truth.u[i]);
    for w in [0.0, 1.0] {
        let y = model.counterfactual(&evidence, &[(TREATMENT, w)], OUTCOME)?;
        println!("    Y had W been {w}: {y:.4}");
    }

    // a unit's own effect next to the average of its reporting cell
    let keys = subgroup_keys(&data)?;
    let members: Vec<usize> = (0..data.len()).filter(|&j| keys[j] == keys[i]).collect();
    let cell = members.iter().map(|&j| truth.tau_true[j]).sum::<f64>() / members.len() as f64;
    println!("    ITE {:.3}  cell CATE {:.3}  ({})", model.ite(&evidence)?, cell, keys[i].label());

    let rows = unit_counterfactuals(&model, &data)?;
    let dir = std::env::var_os("HETCATE_EXAMPLE_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("hetcate-examples"));
    std::fs::create_dir_all(&dir)?;
    write_counterfactual_csv(&dir.join("counterfactuals.csv"), &rows)?;
    println!("wrote {} rows to {}", rows.len(), dir.join("counterfactuals.csv").display());

    // models can be built in code too: x -> y with y = 2x + 1(x > 0) + u
    let toy = StructuralModel::new(vec![
        Variable::exogenous("x"),
        Variable {
            name: "y".into(),
            parents: vec!["x".into()],
            terms: vec![
                Term::new(2.0, vec![Factor::Var("x".into())]),
                Term::new(1.0, vec![Factor::Indicator { var: "x".into(), threshold: 0.0 }]),
            ],
            noise: Noise::Additive("u_y".into()),
        },
    ])?;
    let seen = [("x".to_string(), 0.5), ("y".to_string(), 2.25)].into_iter().collect();
    let y = toy.counterfactual(&seen, &[("x", -0.5)], "y")?;
    println!("toy: y was 2.25 at x=0.5; at x=-0.5 it would have been {y}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
