//! `hetcate` command-line front end.
//!
//! ```text
//! hetcate replicate [--n N] [--seed S] [--methods ols,causal_forest] [--trees T] [--out DIR]
//! hetcate simulate --scenario complex [--dump-data] ...
//! hetcate fit --data FILE [--treatment W] [--outcome Y] [--covariates a,b] ...
//! ```
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
//! Settings resolve as flags, then the `--config` JSON file, then defaults.
//!
//! Output files (all CSV files have a header row):
//!
//! | file | columns |
//! |---|---|
//! | `table2.csv` | scenario, method, bias, variance, mse |
//! | `table3.csv` | minority, female, income, n, true_mean, `<m>_mean`, `<m>_bias`...; last row is the mean absolute bias |
//! | `scatter_<method>.csv` | unit_id, tau_true, tau_hat |
//! | `importance.csv` | feature, importance |
//! | `subgroups.csv` | subgroup, true_mean, one column per method |
//! | `estimates.csv` | unit_id, method, tau_hat |
//! | `cate_<method>.csv` | unit_id, tau_hat[, se] (`fit` only) |
//! | `summary.json` | seed, effective configuration and all reports |
//!
//! `replicate` also writes one subdirectory per scenario with that
//! scenario's figure data; the top-level figure files are for the complex
//! scenario.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{read_mapped_csv, write_atomic, ColumnMapping, Dataset};
use crate::dgp::{self, ScenarioKind, ScenarioSpec};
use crate::error::{Error, Result};
use crate::estimates::write_long_csv;
use crate::eval::{self, ScenarioReport};
use crate::forest::ForestParams;
use crate::metalearners::{LearnerConfig, Method};
use crate::pipeline::{self, EstimatorConfig, ScenarioEvaluation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_TREES: usize = 2000;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_OUT: &str = "hetcate-out";

#[derive(Debug, Parser)]
#[command(name = "hetcate", version, about = "Heterogeneous treatment effect estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run all three simulation scenarios and write the comparison tables.
    Replicate(ReplicateArgs),
    /// Run one simulation scenario.
    Simulate(SimulateArgs),
    /// Estimate effects on a CSV dataset.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of ols, causal_forest, s, t, x, r, dr.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Causal forest size.
    #[arg(long)]
    trees: Option<usize>,
    /// Cross-fitting folds for nuisance models.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for forest growth (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// JSON file with default settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplicateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Also write each scenario's dataset and ground truth.
    #[arg(long)]
    dump_data: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// linear, complex or constant.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Write dataset.csv and ground_truth.csv.
    #[arg(long)]
    dump_data: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    treatment: Option<String>,
    #[arg(long)]
    outcome: Option<String>,
    /// Comma-separated covariate columns (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub scenario: Option<ScenarioKind>,
    pub methods: Option<Vec<Method>>,
    pub trees: Option<usize>,
    pub folds: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub dump_data: Option<bool>,
    pub forest: Option<ForestParams>,
    pub learners: Option<LearnerConfig>,
    pub data: Option<PathBuf>,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub covariates: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::from(e).context(path.display().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Replicate,
    Simulate,
    Fit,
}

/// Fully resolved settings of one invocation. Output directory and thread
/// count are not part of the recorded configuration since they cannot
/// change results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    pub methods: Vec<Method>,
    pub forest: ForestParams,
    pub learners: LearnerConfig,
    pub dump_data: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<ColumnMapping>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            forest: self.forest,
            learners: self.learners.clone(),
            seed: self.seed,
        }
    }
}

fn parse_methods(raw: &[String]) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for r in raw.iter().filter(|r| !r.trim().is_empty()) {
        let m: Method = r.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("--methods must name at least one method".into()));
    }
    Ok(out)
}

fn resolve(command: CommandKind, common: &CommonArgs, file: FileConfig) -> Result<RunConfig> {
    let seed = common.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let methods = match &common.methods {
        Some(raw) => parse_methods(raw)?,
        None => file.methods.unwrap_or_else(|| vec![Method::Ols, Method::CausalForest]),
    };
    if methods.is_empty() {
        return Err(Error::InvalidParameter("methods must be nonempty".into()));
    }
    let folds = common.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);
    let mut forest = file.forest.unwrap_or_default();
    forest.num_trees = common.trees.or(file.trees).unwrap_or(DEFAULT_TREES);
    forest.num_folds_nuisance = folds;
    forest.validate()?;
    let mut learners = file.learners.unwrap_or_default();
    learners.folds = folds;
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("--folds must be at least 2, got {folds}")));
    }
    if let Some(0) = common.threads.or(file.threads) {
        return Err(Error::InvalidParameter("--threads must be positive".into()));
    }
    Ok(RunConfig {
        command,
        seed,
        n: file.n,
        scenario: file.scenario,
        methods,
        forest,
        learners,
        dump_data: file.dump_data.unwrap_or(false),
        data: file.data,
        mapping: (command == CommandKind::Fit).then(|| ColumnMapping {
            treatment: file.treatment.unwrap_or_else(|| ColumnMapping::default().treatment),
            outcome: file.outcome.unwrap_or_else(|| ColumnMapping::default().outcome),
            covariates: file.covariates,
        }),
        out: common
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        threads: common.threads.or(file.threads),
    })
}

fn load_file_config(common: &CommonArgs) -> Result<FileConfig> {
    match &common.config {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn build_config(command: &Command) -> Result<RunConfig> {
    match command {
        Command::Replicate(a) => {
            let file = load_file_config(&a.common)?;
            let mut cfg = resolve(CommandKind::Replicate, &a.common, file)?;
            cfg.n = Some(a.n.or(cfg.n).unwrap_or(DEFAULT_N));
            cfg.scenario = None;
            cfg.dump_data |= a.dump_data;
            ScenarioSpec::new(ScenarioKind::Constant, cfg.n.unwrap(), cfg.seed).validate()?;
            Ok(cfg)
        }
        Command::Simulate(a) => {
            let file = load_file_config(&a.common)?;
            let mut cfg = resolve(CommandKind::Simulate, &a.common, file)?;
            cfg.n = Some(a.n.or(cfg.n).unwrap_or(DEFAULT_N));
            cfg.scenario = Some(match &a.scenario {
                Some(s) => s.parse()?,
                None => cfg.scenario.ok_or_else(|| {
                    Error::InvalidParameter("simulate needs --scenario (linear, complex, constant)".into())
                })?,
            });
            cfg.dump_data |= a.dump_data;
            ScenarioSpec::new(cfg.scenario.unwrap(), cfg.n.unwrap(), cfg.seed).validate()?;
            Ok(cfg)
        }
        Command::Fit(a) => {
            let file = load_file_config(&a.common)?;
            let mut cfg = resolve(CommandKind::Fit, &a.common, file)?;
            cfg.n = None;
            cfg.scenario = None;
            cfg.data = a.data.clone().or(cfg.data);
            if cfg.data.is_none() {
                return Err(Error::InvalidParameter("fit needs --data <csv>".into()));
            }
            let mapping = cfg.mapping.as_mut().expect("fit mapping");
            if let Some(t) = &a.treatment {
                mapping.treatment = t.clone();
            }
            if let Some(o) = &a.outcome {
                mapping.outcome = o.clone();
            }
            if let Some(c) = &a.covariates {
                mapping.covariates = Some(c.clone());
            }
            Ok(cfg)
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    seed: u64,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scenarios: Vec<ScenarioEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitSummary>,
}

#[derive(Debug, Serialize)]
struct FitSummary {
    n: usize,
    num_treated: usize,
    covariates: Vec<String>,
    methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    importance: Option<Vec<(String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dr_ate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimated_propensity_overlap: Option<eval::OverlapDiagnostic>,
}

fn write_summary(cfg: &RunConfig, summary: &Summary) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(summary)?;
    bytes.push(b'\n');
    write_atomic(&cfg.out.join("summary.json"), &bytes)
}

/// Runs one scenario, writing its figure data and per-unit estimates into
/// `dir`.
fn run_scenario(cfg: &RunConfig, kind: ScenarioKind, dir: &Path) -> Result<ScenarioEvaluation> {
    let spec = ScenarioSpec::new(kind, cfg.n.unwrap_or(DEFAULT_N), cfg.seed);
    let (data, truth) = dgp::generate(&spec)?;
    if cfg.dump_data {
        data.write_csv(&dir.join("dataset.csv"))?;
        truth.write_csv(&dir.join("ground_truth.csv"))?;
    }
    let out = pipeline::estimate(&data, &cfg.methods, &cfg.estimator_config())
        .map_err(|e| e.context(format!("{kind} scenario")))?;
    let evaluation = pipeline::evaluate(kind.as_str(), &data, &truth, &out)?;
    eval::emit_figure_data(
        dir,
        &truth.tau_true,
        &out.estimates,
        evaluation.importance.as_deref(),
        &evaluation.subgroups,
    )?;
    write_long_csv(&dir.join("estimates.csv"), &out.estimates)?;
    Ok(evaluation)
}

fn table2_rows(evals: &[ScenarioEvaluation]) -> Vec<ScenarioReport> {
    evals
        .iter()
        .flat_map(|e| {
            e.reports.iter().map(|r| ScenarioReport {
                scenario: e.scenario.clone(),
                report: r.clone(),
            })
        })
        .collect()
}

fn write_tables(cfg: &RunConfig, evals: &[ScenarioEvaluation], subgroup_source: &ScenarioEvaluation) -> Result<()> {
    let rows = table2_rows(evals);
    eval::write_table2_csv(&cfg.out.join("table2.csv"), &rows)?;
    eval::write_markdown(&cfg.out.join("table2.md"), &eval::table2_markdown(&rows))?;
    eval::write_table3_csv(&cfg.out.join("table3.csv"), &subgroup_source.subgroups)?;
    eval::write_markdown(
        &cfg.out.join("table3.md"),
        &eval::table3_markdown(&subgroup_source.subgroups),
    )
}

fn replicate(cfg: &RunConfig) -> Result<()> {
    let mut evals = Vec::with_capacity(3);
    for kind in ScenarioKind::ALL {
        evals.push(run_scenario(cfg, kind, &cfg.out.join(kind.as_str()))?);
    }
    let complex_idx = ScenarioKind::ALL
        .iter()
        .position(|k| *k == ScenarioKind::ComplexNonlinear)
        .expect("complex scenario");
    // top-level figure data mirrors the complex scenario
    let dir = cfg.out.join(ScenarioKind::ComplexNonlinear.as_str());
    for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if name.ends_with(".csv") && !name.starts_with('.') && name != "dataset.csv" && name != "ground_truth.csv" {
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            write_atomic(&cfg.out.join(&name), &bytes)?;
        }
    }
    write_tables(cfg, &evals, &evals[complex_idx])?;
    write_summary(
        cfg,
        &Summary {
            seed: cfg.seed,
            config: cfg,
            scenarios: evals,
            fit: None,
        },
    )
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let kind = cfg.scenario.expect("resolved scenario");
    let evaluation = run_scenario(cfg, kind, &cfg.out)?;
    write_tables(cfg, std::slice::from_ref(&evaluation), &evaluation)?;
    write_summary(
        cfg,
        &Summary {
            seed: cfg.seed,
            config: cfg,
            scenarios: vec![evaluation],
            fit: None,
        },
    )
}

fn load_fit_data(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.data.as_ref().expect("resolved data path");
    read_mapped_csv(path, cfg.mapping.as_ref().expect("resolved mapping"))
}

fn fit(cfg: &RunConfig, data: &Dataset) -> Result<()> {
    let out = pipeline::estimate(data, &cfg.methods, &cfg.estimator_config())?;
    for e in &out.estimates {
        e.write_csv(&cfg.out.join(format!("cate_{}.csv", e.method)))?;
    }
    write_long_csv(&cfg.out.join("estimates.csv"), &out.estimates)?;
    let importance = out.forest.as_ref().map(|f| f.variable_importance());
    if let Some(imp) = &importance {
        crate::data::write_csv_atomic(
            &cfg.out.join("importance.csv"),
            &["feature", "importance"],
            imp.iter().map(|(f, w)| [f.clone(), w.to_string()]),
        )?;
    }
    if let Some(ols) = &out.ols {
        ols.write_coefficients_csv(&cfg.out.join("ols_coefficients.csv"))?;
    }
    write_summary(
        cfg,
        &Summary {
            seed: cfg.seed,
            config: cfg,
            scenarios: Vec::new(),
            fit: Some(FitSummary {
                n: data.len(),
                num_treated: data.num_treated(),
                covariates: data.names().to_vec(),
                methods: out.estimates.iter().map(|e| e.method.clone()).collect(),
                importance,
                dr_ate: out.dr_ate,
                estimated_propensity_overlap: out
                    .forest
                    .as_ref()
                    .map(|f| eval::overlap_check(&f.e_hat_unclipped, eval::OVERLAP_EPSILON)),
            }),
        },
    )
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, Error> {
    match threads {
        None => Ok(f()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidParameter(format!("cannot start {t} worker threads: {e}"))),
    }
}

fn report(e: &Error) {
    eprintln!("hetcate: error: {e}");
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            report(&e);
            return EXIT_CONFIG;
        }
    };
    // input problems in `fit` are configuration errors
    let data = if cfg.command == CommandKind::Fit {
        match load_fit_data(&cfg) {
            Ok(d) => Some(d),
            Err(e) => {
                report(&e);
                return EXIT_CONFIG;
            }
        }
    } else {
        None
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        report(&Error::io(&cfg.out, e));
        return EXIT_RUNTIME;
    }
    let result = with_threads(cfg.threads, || match cfg.command {
        CommandKind::Replicate => replicate(&cfg),
        CommandKind::Simulate => simulate(&cfg),
        CommandKind::Fit => fit(&cfg, data.as_ref().expect("fit data")),
    });
    match result {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            report(&e);
            match e {
                Error::InvalidParameter(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
        Err(e) => {
            report(&e);
            EXIT_CONFIG
        }
    }
}
