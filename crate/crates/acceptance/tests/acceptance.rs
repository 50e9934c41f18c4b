//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hetcate::dgp::{self, GroundTruth, ScenarioKind, ScenarioSpec};
use hetcate::eval::SubgroupKey;
use hetcate::linalg::Matrix;
use hetcate::metalearners::{dr_scores, r_learner, s_learner, t_learner, x_learner, LinearOracle, Method};
use hetcate::pipeline::{self, estimate, EstimatorConfig, ScenarioEvaluation};
use hetcate::scm::{simulation_model, unit_evidence, OUTCOME, TREATMENT};
use hetcate::{cli, Dataset};

const SEED: u64 = 42;
const N: usize = 2000;
const TREES: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Scenario {
    data: Dataset,
    truth: GroundTruth,
    eval: ScenarioEvaluation,
}

impl Scenario {
    fn mse(&self, method: &str) -> f64 {
        self.eval.reports.iter().find(|r| r.method == method).unwrap().mse
    }
}

fn run_scenario(kind: ScenarioKind) -> Scenario {
    let (data, truth) = dgp::generate(&ScenarioSpec::new(kind, N, SEED)).unwrap();
    let mut cfg = EstimatorConfig::new(SEED);
    cfg.forest = cfg.forest.with_trees(TREES);
    let out = estimate(&data, &Method::ALL, &cfg).unwrap();
    let eval = pipeline::evaluate(kind.as_str(), &data, &truth, &out).unwrap();
    Scenario { data, truth, eval }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn criterion_1(s: &Scenario) -> Outcome {
    let (ols, cf) = (s.mse("ols"), s.mse("causal_forest"));
    let pass = cf < 0.5 * ols && in_range(ols, 0.35, 0.65) && in_range(cf, 0.08, 0.30);
    outcome(
        pass,
        format!("complex: ols mse {ols:.4} (want [0.35, 0.65]), forest mse {cf:.4} (want [0.08, 0.30] and < 0.5 x ols)"),
    )
}

fn both_small(s: &Scenario, name: &str) -> Outcome {
    let (ols, cf) = (s.mse("ols"), s.mse("causal_forest"));
    outcome(ols < 0.05 && cf < 0.05, format!("{name}: ols mse {ols:.4}, forest mse {cf:.4} (want both < 0.05)"))
}

fn criterion_4(all: &[&Scenario]) -> Outcome {
    let reports: Vec<_> = all.iter().flat_map(|s| &s.eval.reports).collect();
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.identity_holds())
        .map(|r| r.method.clone())
        .collect();
    outcome(bad.is_empty(), format!("{} reports checked, {} violate mse = bias^2 + variance {bad:?}", reports.len(), bad.len()))
}

fn criterion_5(s: &Scenario) -> Outcome {
    let sg = &s.eval.subgroups;
    let ols = sg.method_index("ols").unwrap();
    let cf = sg.method_index("causal_forest").unwrap();
    let high = sg.row(SubgroupKey { minority: true, female: true, high_income: true }).unwrap();
    let low = sg.row(SubgroupKey { minority: true, female: true, high_income: false }).unwrap();
    let analytic = 2.0 + 5.0 + 2.0 / (2.0 * std::f64::consts::PI).sqrt();
    let truth_ok = (high.true_mean - analytic).abs() <= 0.35;
    let under = high.biases[ols] <= -1.0;
    let over = low.biases[ols] >= 1.0;
    let (mab_ols, mab_cf) = (sg.mean_abs_bias[ols], sg.mean_abs_bias[cf]);
    let mab_ok = mab_cf < mab_ols && mab_cf <= 0.40;
    outcome(
        truth_ok && under && over && mab_ok,
        format!(
            "true mean {:.3} vs {analytic:.3}; ols bias high {:+.3}, low {:+.3}; mean abs bias forest {mab_cf:.3} vs ols {mab_ols:.3}",
            high.true_mean, high.biases[ols], low.biases[ols]
        ),
    )
}

fn criterion_6(s: &Scenario) -> Outcome {
    let mut imp = s.eval.importance.clone().unwrap();
    imp.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top: Vec<&str> = imp.iter().take(2).map(|(n, _)| n.as_str()).collect();
    let pass = top.contains(&"minority") && top.contains(&"female");
    let ranking: Vec<String> = imp.iter().map(|(n, w)| format!("{n} {w:.3}")).collect();
    outcome(pass, format!("ranking: {}", ranking.join(", ")))
}

fn criterion_7(constant: &Scenario, complex: &Scenario) -> Outcome {
    let cov = constant.eval.coverage.unwrap();
    let width = complex.eval.median_interval_width.unwrap();
    outcome(
        in_range(cov, 0.85, 0.99) && in_range(width, 0.3, 1.2),
        format!("constant coverage {cov:.3} (want [0.85, 0.99]), complex median width {width:.3} (want [0.3, 1.2])"),
    )
}

fn criterion_8(all: &[(ScenarioKind, &Scenario)]) -> Outcome {
    let mut failures = Vec::new();
    let mut units = 0;
    for (kind, s) in all {
        let model = simulation_model(*kind);
        for i in 0..s.data.len() {
            units += 1;
            let e = unit_evidence(&s.data, i);
            let ok = (|| -> Option<bool> {
                let noise = model.abduct(&e).ok()?;
                let round_trip = model.simulate(&noise).ok()? == e;
                let ite = model.ite(&e).ok()? == dgp::true_cate(*kind, &s.data.row(i)).ok()?;
                let w = s.data.treatment()[i];
                let flipped = model.counterfactual(&e, &[(TREATMENT, f64::from(1 - w))], OUTCOME).ok()?;
                let stored = if w == 1 { s.truth.y0[i] } else { s.truth.y1[i] };
                Some(round_trip && ite && flipped.to_bits() == stored.to_bits())
            })();
            if ok != Some(true) {
                failures.push(format!("{}#{i}", kind.as_str()));
            }
        }
    }
    outcome(failures.is_empty(), format!("{units} units, {} mismatches {:?}", failures.len(), &failures[..failures.len().min(5)]))
}

/// Deterministic uniform stream for the grid instance.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn grid_search_gap() -> f64 {
    let mut rng = Lcg(SEED);
    let (mut rows, mut w, mut y, mut m, mut e) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..30 {
        let x = rng.next();
        let ei = 0.3 + 0.4 * x;
        let wi = u8::from(rng.next() < ei);
        let mi = 1.0 + x * x;
        y.push(mi + (f64::from(wi) - ei) * (1.0 - 2.0 * x) + rng.next() - 0.5);
        rows.push(vec![x]);
        w.push(wi);
        m.push(mi);
        e.push(ei);
    }
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let d = Dataset::new(vec!["x".into()], Matrix::from_rows(&rows).unwrap(), w.clone(), y.clone()).unwrap();
    let wr: Vec<f64> = (0..30).map(|i| f64::from(w[i]) - e[i]).collect();
    let yr: Vec<f64> = (0..30).map(|i| y[i] - m[i]).collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for ia in -800..=800 {
        for ib in -800..=800 {
            let (a, b) = (f64::from(ia) * 0.01, f64::from(ib) * 0.01);
            let loss: f64 = (0..30).map(|i| (yr[i] - wr[i] * (a + b * x[i])).powi(2)).sum();
            if loss < best.0 {
                best = (loss, a, b);
            }
        }
    }
    let est = r_learner(&d, &m, &e, &LinearOracle { ridge: 0.0 }, 0).unwrap();
    (0..30).map(|i| (est.tau_hat[i] - (best.1 + best.2 * x[i])).abs()).fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let lin = LinearOracle { ridge: 0.0 };
    let (d, t) = dgp::generate(&ScenarioSpec::new(ScenarioKind::Linear, 400, SEED).noiseless()).unwrap();
    let minority = d.column("minority").unwrap();
    let target: Vec<f64> = minority.iter().map(|m| if *m == 1.0 { 3.5 } else { 2.0 }).collect();
    let worst = |v: &[f64]| v.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let s = worst(&s_learner(&d, &lin, &["minority".to_string()], 0).unwrap().tau_hat);
    let tl = worst(&t_learner(&d, &lin, 0).unwrap().tau_hat);
    let x = worst(&x_learner(&d, &lin, &t.propensity, 0).unwrap().tau_hat);
    let r = worst(&r_learner(&d, &t.outcome_mean(), &t.propensity, &lin, 0).unwrap().tau_hat);

    let (dc, tc) = dgp::generate(&ScenarioSpec::new(ScenarioKind::Constant, N, SEED)).unwrap();
    let zeros = vec![0.0; N];
    let scores = dr_scores(&dc, &zeros, &zeros, &tc.propensity).unwrap();
    let dr_gap = (scores.iter().sum::<f64>() / N as f64 - tc.ate()).abs();

    let grid = grid_search_gap();
    let pass = s.max(tl).max(x).max(r) <= 1e-6 && dr_gap <= 0.15 && grid <= 0.02;
    outcome(
        pass,
        format!("max error s {s:.1e}, t {tl:.1e}, x {x:.1e}, r {r:.1e}; dr ate gap {dr_gap:.3}; r vs grid {grid:.4}"),
    )
}

fn collect_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_cli(args: &[String]) -> i32 {
    let mut full = vec!["hetcate".to_string()];
    full.extend(args.iter().cloned());
    cli::main_with_args(full)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let trees = TREES.to_string();
    let data = tmp.path().join("t1-sim").join("dataset.csv");
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("replicate", vec!["replicate".into(), "--trees".into(), trees.clone()]),
        (
            "sim",
            ["simulate", "--scenario", "complex", "--methods", "ols,causal_forest,s,t,x,r,dr", "--dump-data", "--trees", &trees]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        (
            "fit",
            ["fit", "--data", data.to_str().unwrap(), "--methods", "ols,causal_forest,dr", "--trees", &trees]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
    ];
    let mut compared = 0;
    let mut problems = Vec::new();
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for threads in [1, 4] {
            let out = tmp.path().join(format!("t{threads}-{name}"));
            let mut a = args.clone();
            a.extend(["--threads".into(), threads.to_string(), "--out".into(), out.to_str().unwrap().to_string()]);
            let code = run_cli(&a);
            if code != 0 {
                problems.push(format!("{name} with {threads} threads exited {code}"));
            }
            outputs.push(collect_files(&out));
        }
        let (a, b) = (&outputs[0], &outputs[1]);
        if a.keys().ne(b.keys()) {
            problems.push(format!("{name}: file sets differ"));
        }
        for (path, bytes) in a {
            compared += 1;
            if b.get(path) != Some(bytes) {
                problems.push(format!("{name}: {} differs", path.display()));
            }
        }
    }
    outcome(
        problems.is_empty() && compared > 0,
        format!("{compared} files compared across 1 and 4 threads; problems: {problems:?}"),
    )
}

fn main() {
    let start = Instant::now();
    let complex = run_scenario(ScenarioKind::ComplexNonlinear);
    let linear = run_scenario(ScenarioKind::Linear);
    let constant = run_scenario(ScenarioKind::Constant);

    let results = vec![
        (1, "scenario ordering on the complex scenario", criterion_1(&complex)),
        (2, "linear scenario accuracy", both_small(&linear, "linear")),
        (3, "constant scenario accuracy", both_small(&constant, "constant")),
        (4, "error decomposition identity", criterion_4(&[&complex, &linear, &constant])),
        (5, "subgroup analysis", criterion_5(&complex)),
        (6, "variable importance ranking", criterion_6(&complex)),
        (7, "interval coverage and width", criterion_7(&constant, &complex)),
        (
            8,
            "structural counterfactual exactness",
            criterion_8(&[
                (ScenarioKind::ComplexNonlinear, &complex),
                (ScenarioKind::Linear, &linear),
                (ScenarioKind::Constant, &constant),
            ]),
        ),
        (9, "meta-learner oracle suite", criterion_9()),
        (10, "determinism across thread counts", criterion_10()),
    ];

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {id:>2} {tag}  {name}: {}", o.detail);
    }
    println!(
        "{} of {} criteria passed ({:.0}s)",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
