use std::path::Path;
use std::process::{Command, Output};

const GRID: [&str; 6] = ["--tau-multipliers", "0.4,1", "--lambda1s", "0.01,0.1", "--lambda2s", "0.01,0.1"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fusedhuber")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn bench_outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        let mut args = vec!["bench", "--out", dir.to_str().unwrap(), "--ps", "15", "--n", "40", "--n-test", "20", "--replications", "2", "--noises", "t,lognormal", "--workers", workers, "--seed", "11"];
        args.extend(GRID);
        ok(&args);
    }
    for name in ["summary.csv", "replications.csv", "coefficients_t_p15.csv", "coefficients_lognormal_p15.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
    let summary = read(&a, "summary.csv");
    assert!(summary.starts_with("noise,p,method,metric,value\n"));
    assert!(summary.contains("t,15,huber,mse,"));
    assert!(summary.contains("lognormal,15,squared,std,"));
    assert!(read(&a, "timing.csv").contains(",cpu,"));
    let manifest: serde_json::Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["seeds"], serde_json::json!([11, 12]));
    assert!(a.join("run.log").exists());
}

#[test]
fn tune_writes_one_score_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let mut args = vec!["tune", "--out", out.to_str().unwrap(), "--p", "15", "--n", "40"];
    args.extend(GRID);
    ok(&args);
    let scores = read(&out, "scores.csv");
    assert_eq!(scores.lines().count(), 1 + 8);
    assert_eq!(scores.lines().filter(|l| l.ends_with(",1")).count(), 1);
    let best: serde_json::Value = serde_json::from_str(&read(&out, "best.json")).unwrap();
    assert_eq!(best["cells"], 8);
    assert_eq!(read(&out, "beta.csv").lines().count(), 16);

    // squared loss collapses the tau axis
    let out2 = tmp.path().join("t2");
    let mut args = vec!["tune", "--out", out2.to_str().unwrap(), "--p", "15", "--n", "40", "--loss", "squared"];
    args.extend(GRID);
    ok(&args);
    assert_eq!(read(&out2, "scores.csv").lines().count(), 1 + 4);
}

#[test]
fn simulate_then_fit_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--out", sim.to_str().unwrap(), "--p", "14", "--n", "30", "--noise", "lognormal"]);
    assert_eq!(read(&sim, "train.csv").lines().count(), 31);
    assert_eq!(read(&sim, "test.csv").lines().count(), 101);
    assert_eq!(read(&sim, "beta_star.csv").lines().count(), 15);

    let fit = tmp.path().join("fit");
    let data = sim.join("train.csv");
    ok(&["fit", "--out", fit.to_str().unwrap(), "--data", data.to_str().unwrap(), "--lambda1", "0.05", "--order", "hierarchical", "--normalize"]);
    let report: serde_json::Value = serde_json::from_str(&read(&fit, "fit.json")).unwrap();
    assert!(report["iterations"].as_u64().unwrap() > 0);
    assert!(read(&fit, "history.csv").starts_with("iteration,phi_mu,phi_z,phi_alpha,phi_beta,phi_gamma,res\n"));
    assert_eq!(read(&fit, "beta.csv").lines().count(), 15);

    let tuned = tmp.path().join("tuned");
    let mut args = vec!["tune", "--out", tuned.to_str().unwrap(), "--data", data.to_str().unwrap(), "--taus", "0.5,2"];
    args.extend(&GRID[2..]);
    ok(&args);
    assert_eq!(read(&tuned, "scores.csv").lines().count(), 1 + 8);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[solver]\nlambda1 = 0.2\ntol = 1e-4\n[simulate]\np = 13\nn = 25\n").unwrap();
    let out = tmp.path().join("o");
    ok(&["fit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--lambda2", "0.3"]);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "fit.json")).unwrap();
    assert_eq!(report["lambda1"], 0.2);
    assert_eq!(report["lambda2"], 0.3);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["simulate"]["p"], 13);
}

#[test]
fn diagnose_with_infinite_tau_matches_gram() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    ok(&["diagnose", "--out", out.to_str().unwrap(), "--p", "12", "--n", "60", "--tau", "inf"]);
    let diag = read(&out, "diagnostics.csv");
    assert!(diag.contains("hessian_gram_max_abs_diff,0\n"), "{diag}");
    assert!(diag.contains("re_rho_minus_estimate,"));
    assert!(diag.contains("cone_inside,"));
    assert_eq!(read(&out, "hessian_gram.csv").lines().count(), 1 + 144);
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let r = run(&["fit", "--out", out.to_str().unwrap(), "--sigma", "-1"]);
    assert_eq!(r.status.code(), Some(2));
    let r = run(&["fit", "--out", out.to_str().unwrap(), "--data", "/nonexistent.csv"]);
    assert_eq!(r.status.code(), Some(2));
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "y,a,b\n1,2,oops\n").unwrap();
    let r = run(&["fit", "--out", out.to_str().unwrap(), "--data", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("oops"));
    assert!(!run(&["frobnicate"]).status.success());
}
