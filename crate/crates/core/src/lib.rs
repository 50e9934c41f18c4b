//! Heterogeneous treatment effect estimation.
//!
//! * [`dgp`]: simulation scenarios with full ground truth
//! * [`interaction`]: OLS with treatment-by-covariate interactions
//! * [`forest`]: honest causal forests, nuisance regression forests
//! * [`metalearners`]: S/T/X/R/DR learners over pluggable regression oracles
//! * [`scm`]: additive-noise structural models and exact counterfactuals
//! * [`eval`]: bias/variance/MSE, subgroup tables, coverage, figure data
//! * [`pipeline`]: run several estimators on one dataset and score them
//! * [`cli`]: the `hetcate` command-line front end

pub mod cli;
pub mod crossfit;
pub mod data;
pub mod dgp;
pub mod error;
pub mod estimates;
pub mod eval;
pub mod forest;
pub mod interaction;
pub mod linalg;
pub mod metalearners;
pub mod pipeline;
pub mod scm;
pub mod seed;
pub mod tree;

pub use data::Dataset;
pub use dgp::{GroundTruth, ScenarioKind, ScenarioSpec};
pub use error::{Error, Result};
pub use estimates::CateEstimates;
pub use forest::{ForestModel, ForestParams};
