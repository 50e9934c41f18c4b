//! Draw the three simulation scenarios and look at what the truth holds.
//!
//!     cargo run --release --example simulate

use hetcate::dgp::{self, ScenarioKind, ScenarioSpec};
use hetcate::eval::{subgroup_report, SubgroupKey};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for kind in ScenarioKind::ALL {
        let (data, truth) = dgp::generate(&ScenarioSpec::new(kind, 2000, 42))?;
        let treated = data.num_treated() as f64 / data.len() as f64;
        println!(
            "{:<18} n={}  treated={:.3}  ATE={:.3}",
            kind.as_str(),
            data.len(),
            treated,
            truth.ate()
        );
        if kind == ScenarioKind::ComplexNonlinear {
            // true CATE averaged within the eight reporting cells
            let report = subgroup_report(&data, &truth.tau_true, &[])?;
            for key in SubgroupKey::all() {
                let row = report.row(key).expect("every cell is reported");
                println!("    {:<36} n={:<4} tau={:.3}", key.label(), row.n, row.true_mean);
            }
        }
    }

    // the noiseless variant used by exactness checks
    let (_, truth) = dgp::generate(&ScenarioSpec::new(ScenarioKind::Linear, 5, 1).noiseless())?;
    println!("noiseless linear: u = {:?}", truth.u);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
