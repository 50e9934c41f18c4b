use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hetcate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetcate")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect();
    out.sort();
    out
}

#[test]
fn simulate_single_method_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = hetcate(&["simulate", "--scenario", "constant", "--methods", "ols", "--n", "300", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let lines: Vec<&str> = t2.lines().collect();
    assert_eq!(lines[0], "scenario,method,bias,variance,mse");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("constant,ols,"));
}

#[test]
fn dump_data_and_byte_identical_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        let o = hetcate(&[
            "simulate", "--scenario", "complex", "--n", "400", "--trees", "100", "--dump-data",
            "--threads", threads, "--out", &out_arg(dir),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(a.path(), "1");
    run(b.path(), "3");
    let data = fs::read_to_string(a.path().join("dataset.csv")).unwrap();
    assert_eq!(data.lines().count(), 401);
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), fb.len());
    assert!(fa.len() >= 8);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn replicate_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = hetcate(&["replicate", "--n", "400", "--trees", "60", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert_eq!(t2.lines().count(), 1 + 3 * 2);
    let t3 = fs::read_to_string(dir.path().join("table3.csv")).unwrap();
    assert_eq!(t3.lines().count(), 1 + 8 + 1);
    assert!(t3.lines().last().unwrap().starts_with("mean_absolute_bias"));
    for f in ["table2.md", "table3.md", "importance.csv", "subgroups.csv", "scatter_ols.csv", "scatter_causal_forest.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 42);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hetcate(&["simulate", "--scenario", "sideways"]).status.code(), Some(2));
    assert_eq!(hetcate(&["teleport"]).status.code(), Some(2));
    assert_eq!(hetcate(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let o = hetcate(&["simulate", "--scenario", "linear", "--methods", "ols,magic", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sed": 1}"#).unwrap();
    let o = hetcate(&["simulate", "--scenario", "linear", "--config", bad.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    write_csv(&p, "x,treat,y", (0..40).map(|i| format!("{i},{},{}", i % 3, i)));
    let o = hetcate(&["fit", "--data", p.to_str().unwrap(), "--treatment", "treat", "--outcome", "y", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("13 offending") && msg.contains("row 30=") && !msg.contains("row 33="), "{msg}");

    let o = hetcate(&["fit", "--data", p.to_str().unwrap(), "--treatment", "treat", "--outcome", "earnings", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("earnings"), "{}", stderr(&o));
}

#[test]
fn fit_finds_the_high_effect_stratum() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("toy.csv");
    // effect 4 when x > 0.5, none otherwise; deterministic design
    write_csv(
        &p,
        "x,W,Y",
        (0..600).map(|i| {
            let x = (i as f64 * 0.618_033_988_7).fract();
            let w = (i / 2 + i) % 2;
            let noise = ((i * 7919) % 101) as f64 / 100.0 - 0.5;
            let y = x + if x > 0.5 { 4.0 * w as f64 } else { 0.0 } + noise;
            format!("{x},{w},{y}")
        }),
    );
    let o = hetcate(&[
        "fit", "--data", p.to_str().unwrap(), "--methods", "causal_forest", "--trees", "200", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("cate_causal_forest.csv")).unwrap();
    let tau: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    let (mut hi, mut lo) = (Vec::new(), Vec::new());
    for (i, t) in tau.iter().enumerate() {
        let x = (i as f64 * 0.618_033_988_7).fract();
        if x > 0.5 { hi.push(*t) } else { lo.push(*t) }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&hi) > mean(&lo) + 2.0, "{} vs {}", mean(&hi), mean(&lo));
}

#[test]
fn simulated_data_round_trips_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let fit = dir.path().join("fit");
    let common = ["--methods", "ols,causal_forest", "--trees", "80", "--seed", "5"];
    let mut args = vec!["simulate", "--scenario", "linear", "--n", "300", "--dump-data"];
    args.extend(common);
    let sim_s = out_arg(&sim);
    args.extend(["--out", &sim_s]);
    assert_eq!(hetcate(&args).status.code(), Some(0));
    let data = sim.join("dataset.csv");
    let fit_s = out_arg(&fit);
    let mut args = vec!["fit", "--data", data.to_str().unwrap()];
    args.extend(common);
    args.extend(["--out", &fit_s]);
    let o = hetcate(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(sim.join("estimates.csv")).unwrap(), fs::read(fit.join("estimates.csv")).unwrap());
}
