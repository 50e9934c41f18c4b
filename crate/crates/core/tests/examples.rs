// Every example's run() executes here, so examples cannot rot.

#[path = "../examples/causal_forest.rs"]
mod causal_forest;
#[path = "../examples/counterfactuals.rs"]
mod counterfactuals;
#[path = "../examples/meta_learners.rs"]
mod meta_learners;
#[path = "../examples/ols_interaction.rs"]
mod ols_interaction;
#[path = "../examples/replicate_tables.rs"]
mod replicate_tables;
#[path = "../examples/simulate.rs"]
mod simulate;
#[path = "../examples/variable_importance.rs"]
mod variable_importance;

#[test]
fn simulate_runs() {
    simulate::run().unwrap();
}

#[test]
fn ols_interaction_runs() {
    ols_interaction::run().unwrap();
}

#[test]
fn causal_forest_runs() {
    causal_forest::run().unwrap();
}

#[test]
fn meta_learners_runs() {
    meta_learners::run().unwrap();
}

#[test]
fn counterfactuals_runs() {
    counterfactuals::run().unwrap();
}

#[test]
fn replicate_tables_runs() {
    replicate_tables::run().unwrap();
}

#[test]
fn variable_importance_runs() {
    variable_importance::run().unwrap();
}
