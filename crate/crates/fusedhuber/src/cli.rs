//! Command-line front end: `simulate`, `fit`, `tune`, `bench` and `diagnose`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fusedhuber_core::diagnostics::{bregman_symmetric, cone_report, gram_matrix, huber_hessian, loss_gradient, restricted_eigenvalue_estimate, RE_MAX_DIM};
use fusedhuber_core::metrics::{estimation_error, mae, residual_std};
use fusedhuber_core::solver::solve;
use fusedhuber_core::tune::TuneGrid;
use fusedhuber_core::{objective, LossKind, Matrix, ProblemData};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{LossName, OrderName, RunConfig};
use crate::dataset::{default_feature_names, load_csv, save_csv};
use crate::experiments::{rate_experiment, run_bench as bench, RateConfig};
use crate::ordering::{hierarchical_order, normalize_columns};
use crate::parallel::{default_workers, parallel_grid_search};
use crate::report::{coefficient_rows, history_rows, num, score_rows, write_bench, write_rate, Manifest, OutputDir, HISTORY_HEADER, SCORE_HEADER};
use crate::simulate::{generate, NoiseLaw};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "fusedhuber", version, about = "Fused-lasso penalized adaptive Huber regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/test pair and its true coefficients.
    Simulate,
    /// Fit one model at fixed (tau, lambda1, lambda2).
    Fit,
    /// Grid-search (tau, lambda1, lambda2) on a validation split.
    Tune,
    /// Replicated simulate -> tune -> fit runs over noise laws and dimensions.
    Bench,
    /// Loss gradient, Hessian, Bregman, cone and rate diagnostics.
    Diagnose,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Tune => "tune",
            Command::Bench => "bench",
            Command::Diagnose => "diagnose",
        }
    }
}

/// Flags override the config file, which overrides the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for data generation and splits [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Huber robustification parameter [default: 1.345]; "inf" gives the squared loss curvature everywhere.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// l1 penalty weight [default: 0.1].
    #[arg(long, global = true)]
    pub lambda1: Option<f64>,
    /// Fused (difference) penalty weight [default: 0.1].
    #[arg(long, global = true)]
    pub lambda2: Option<f64>,
    /// ADMM penalty parameter [default: 0.1].
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Stopping tolerance on the largest KKT residual [default: 1e-3].
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap [default: 2000].
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Loss function [default: huber].
    #[arg(long, global = true, value_enum)]
    pub loss: Option<LossName>,
    /// Scale feature columns to unit root-mean-square.
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Reorder columns so correlated features sit next to each other [default: none].
    #[arg(long, global = true, value_enum)]
    pub order: Option<OrderName>,
    /// Replications per bench cell and per rate-experiment sample size [default: 20].
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// CSV dataset; without it the simulator supplies the data.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Response column name [default: y].
    #[arg(long, global = true)]
    pub response: Option<String>,
    /// Simulated training rows [default: 100].
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Simulated test rows, used for validation [default: 100].
    #[arg(long, global = true)]
    pub n_test: Option<usize>,
    /// Simulated features, at least 12 [default: 50].
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// AR(1) correlation between adjacent simulated features [default: 0.5].
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// gaussian, t or lognormal.
    #[arg(long, global = true)]
    pub noise: Option<String>,
    /// Absolute tau grid, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Tau grid as multiples of sqrt(n / ln p), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub tau_multipliers: Option<Vec<f64>>,
    /// lambda1 grid, comma separated [default: 9 log-spaced values in 1e-3..1e1].
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda1s: Option<Vec<f64>>,
    /// lambda2 grid, comma separated [default: as lambda1s].
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda2s: Option<Vec<f64>>,
    /// Noise laws for bench, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub noises: Option<Vec<String>>,
    /// Dimensions for bench, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ps: Option<Vec<usize>>,
    /// Sample sizes for the diagnose rate experiment, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
}

impl Flags {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.seed => cfg.seed);
        set!(self.out => cfg.out);
        set!(self.workers => cfg.workers);
        set!(self.replications => cfg.replications);
        set!(self.tau.map(Some) => cfg.solver.tau);
        set!(self.lambda1.map(Some) => cfg.solver.lambda1);
        set!(self.lambda2.map(Some) => cfg.solver.lambda2);
        set!(self.sigma.map(Some) => cfg.solver.sigma);
        set!(self.tol.map(Some) => cfg.solver.tol);
        set!(self.max_iter.map(Some) => cfg.solver.max_iter);
        set!(self.loss.map(Some) => cfg.solver.loss);
        set!(self.order => cfg.data.order);
        set!(self.data.clone().map(Some) => cfg.data.path);
        set!(self.response => cfg.data.response);
        set!(self.n => cfg.simulate.n);
        set!(self.n_test => cfg.simulate.n_test);
        set!(self.p => cfg.simulate.p);
        set!(self.rho => cfg.simulate.rho);
        set!(self.noise => cfg.simulate.noise);
        set!(self.taus.clone().map(Some) => cfg.grid.taus);
        set!(self.tau_multipliers.clone().map(Some) => cfg.grid.tau_multipliers);
        set!(self.lambda1s.clone().map(Some) => cfg.grid.lambda1s);
        set!(self.lambda2s.clone().map(Some) => cfg.grid.lambda2s);
        set!(self.noises => cfg.bench.noises);
        set!(self.ps => cfg.bench.ps);
        set!(self.n_list => cfg.diagnose.n_list);
        if self.normalize {
            cfg.data.normalize = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What a command produced. `failures` counts cells that did not complete.
#[derive(Debug)]
pub struct RunSummary {
    pub out: PathBuf,
    pub files: Vec<String>,
    pub failures: usize,
}

fn workers(cfg: &RunConfig) -> usize {
    if cfg.workers == 0 {
        default_workers()
    } else {
        cfg.workers
    }
}

/// Data ready for fitting, after optional ordering and scaling.
struct Prepared {
    train: ProblemData,
    validation: Option<ProblemData>,
    beta_star: Option<Vec<f64>>,
    names: Vec<String>,
}

fn divide_columns(data: &ProblemData, scales: &[f64]) -> Result<ProblemData, Error> {
    let x = data.x();
    let mut z = x.clone();
    for i in 0..x.nrows() {
        for (j, s) in scales.iter().enumerate() {
            z.set(i, j, x.get(i, j) / s);
        }
    }
    Ok(ProblemData::new(z, data.y().to_vec())?)
}

fn prepare(cfg: &RunConfig, split_file: bool) -> Result<Prepared, Error> {
    let (mut train, mut validation, mut beta_star, mut names) = match &cfg.data.path {
        Some(path) => {
            let ds = load_csv(path, &cfg.data.response)?;
            (ds.problem, None, None, ds.feature_names)
        }
        None => {
            let s = generate(&cfg.simulate.spec(cfg.seed)?)?;
            let p = s.train.p();
            (s.train, s.test, Some(s.beta_star.into_vec()), default_feature_names(p))
        }
    };

    if cfg.data.order == OrderName::Hierarchical {
        let order = hierarchical_order(train.x()).map_err(|e| match e {
            Error::ZeroVariance { column } => Error::InvalidArgument(format!("column {:?} has zero variance", names[column])),
            e => e,
        })?;
        train = train.with_column_order(&order)?;
        validation = validation.map(|v| v.with_column_order(&order)).transpose()?;
        beta_star = beta_star.map(|b| order.iter().map(|&j| b[j]).collect());
        names = order.iter().map(|&j| names[j].clone()).collect();
    }

    if cfg.data.normalize {
        let (_, scales) = normalize_columns(train.x()).map_err(|e| match e {
            Error::ZeroVariance { column } => Error::InvalidArgument(format!("column {:?} is identically zero", names[column])),
            e => e,
        })?;
        train = divide_columns(&train, &scales)?;
        validation = validation.map(|v| divide_columns(&v, &scales)).transpose()?;
        // X diag(1/s) (s * beta) = X beta
        beta_star = beta_star.map(|b| b.iter().zip(&scales).map(|(v, s)| v * s).collect());
    }

    if split_file && cfg.data.path.is_some() {
        let n = train.n();
        if n < 2 {
            return Err(Error::InvalidArgument("splitting needs at least two rows".into()));
        }
        let mut rows: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(7);
        rows.shuffle(&mut rng);
        let k = ((cfg.data.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let (a, b) = rows.split_at(k);
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        a.sort_unstable();
        b.sort_unstable();
        validation = Some(train.select_rows(&b)?);
        train = train.select_rows(&a)?;
    }
    Ok(Prepared { train, validation, beta_star, names })
}

fn finish(mut out: OutputDir, mut manifest: Manifest<'_>, failures: usize) -> Result<RunSummary, Error> {
    manifest.outputs = out.written().to_vec();
    manifest.outputs.push("manifest.json".into());
    out.write_json("manifest.json", &manifest)?;
    out.log(&format!("{} finished, {failures} failed cells", manifest.command))?;
    Ok(RunSummary { out: out.root().to_path_buf(), files: out.written().to_vec(), failures })
}

pub fn run_simulate(cfg: &RunConfig) -> Result<RunSummary, Error> {
    let mut out = OutputDir::create(&cfg.out)?;
    out.log("simulate started")?;
    let spec = cfg.simulate.spec(cfg.seed)?;
    let s = generate(&spec)?;
    let names = default_feature_names(spec.p);
    save_csv(out.path("train.csv"), &s.train, &names, &cfg.data.response)?;
    out.record("train.csv");
    if let Some(test) = &s.test {
        save_csv(out.path("test.csv"), test, &names, &cfg.data.response)?;
        out.record("test.csv");
    }
    let truth: Vec<Vec<String>> = s.beta_star.iter().enumerate().map(|(j, b)| vec![(j + 1).to_string(), names[j].clone(), num(*b)]).collect();
    out.write_csv("beta_star.csv", &["index", "feature", "beta"], truth)?;
    finish(out, Manifest::new("simulate", cfg), 0)
}

#[derive(Serialize)]
struct FitReport {
    status: String,
    iterations: usize,
    final_residual: Option<f64>,
    objective: f64,
    tau: f64,
    lambda1: f64,
    lambda2: f64,
    loss: String,
    train_residual_std: Option<f64>,
    validation_mae: Option<f64>,
    estimation_error: Option<f64>,
}

pub fn run_fit(cfg: &RunConfig) -> Result<RunSummary, Error> {
    let mut out = OutputDir::create(&cfg.out)?;
    out.log("fit started")?;
    let solver = cfg.solver.resolve()?;
    let prep = prepare(cfg, false)?;
    let fit = solve(&prep.train, &solver, None)?;
    let truth = prep.beta_star.as_deref();
    out.write_csv(
        "beta.csv",
        if truth.is_some() { &["index", "feature", "beta", "truth"] } else { &["index", "feature", "beta"] },
        coefficient_rows(&prep.names, &fit.beta, truth),
    )?;
    out.write_csv("history.csv", &HISTORY_HEADER, history_rows(&fit.residual_history))?;
    let report = FitReport {
        status: format!("{:?}", fit.status).to_lowercase(),
        iterations: fit.iterations,
        final_residual: fit.final_residuals().map(|r| r.res),
        objective: objective(&prep.train, &fit.beta, &solver)?,
        tau: solver.tau,
        lambda1: solver.lambda1,
        lambda2: solver.lambda2,
        loss: format!("{:?}", solver.loss).to_lowercase(),
        train_residual_std: residual_std(&prep.train, &fit.beta).ok(),
        validation_mae: prep.validation.as_ref().map(|v| mae(v, &fit.beta)).transpose()?,
        estimation_error: truth.map(|t| estimation_error(&fit.beta, t)).transpose()?,
    };
    out.write_json("fit.json", &report)?;
    finish(out, Manifest::new("fit", cfg), 0)
}

fn tune_grid(cfg: &RunConfig, n: usize, p: usize, loss: LossKind) -> Result<TuneGrid, Error> {
    match (&cfg.grid.taus, loss) {
        (Some(taus), LossKind::Huber) => {
            let spec = cfg.grid.spec();
            Ok(TuneGrid::new(taus.clone(), spec.lambda1s, spec.lambda2s)?)
        }
        _ => cfg.grid.spec().resolve(n, p, loss),
    }
}

pub fn run_tune(cfg: &RunConfig) -> Result<RunSummary, Error> {
    let mut out = OutputDir::create(&cfg.out)?;
    out.log("tune started")?;
    let base = cfg.solver.resolve()?;
    let prep = prepare(cfg, true)?;
    let validation = prep.validation.as_ref().ok_or_else(|| Error::InvalidArgument("tuning needs a validation split (set n_test > 0)".into()))?;
    let grid = tune_grid(cfg, prep.train.n(), prep.train.p(), base.loss)?;
    let outcome = parallel_grid_search(&prep.train, validation, &grid, &base, prep.beta_star.as_deref(), workers(cfg))?;
    out.write_csv("scores.csv", &SCORE_HEADER, score_rows(&outcome))?;
    let best = outcome.best_score();
    let truth = prep.beta_star.as_deref();
    out.write_csv(
        "beta.csv",
        if truth.is_some() { &["index", "feature", "beta", "truth"] } else { &["index", "feature", "beta"] },
        coefficient_rows(&prep.names, &best.beta, truth),
    )?;
    #[derive(Serialize)]
    struct Best {
        tau: f64,
        lambda1: f64,
        lambda2: f64,
        validation_mae: f64,
        estimation_error: Option<f64>,
        cells: usize,
        failed_cells: usize,
    }
    out.write_json(
        "best.json",
        &Best {
            tau: outcome.best.tau,
            lambda1: outcome.best.lambda1,
            lambda2: outcome.best.lambda2,
            validation_mae: best.mae,
            estimation_error: best.estimation_error,
            cells: outcome.rows.len(),
            failed_cells: outcome.failures(),
        },
    )?;
    let failures = outcome.failures();
    finish(out, Manifest::new("tune", cfg), failures)
}

pub fn run_bench(cfg: &RunConfig) -> Result<RunSummary, Error> {
    let mut out = OutputDir::create(&cfg.out)?;
    out.log("bench started")?;
    let base = cfg.solver.resolve()?;
    let bc = cfg.bench_config()?;
    let report = bench(&bc, &base, workers(cfg))?;
    write_bench(&mut out, &report)?;
    let mut manifest = Manifest::new("bench", cfg);
    manifest.seeds = (0..bc.replications as u64).map(|r| bc.seed.wrapping_add(r)).collect();
    finish(out, manifest, report.failures())
}

pub fn run_diagnose(cfg: &RunConfig) -> Result<RunSummary, Error> {
    let mut out = OutputDir::create(&cfg.out)?;
    out.log("diagnose started")?;
    let solver = cfg.solver.resolve()?;
    let tau = match solver.loss {
        LossKind::Huber => solver.tau,
        LossKind::Squared => f64::INFINITY,
    };
    let prep = prepare(cfg, false)?;
    let data = &prep.train;
    let fit = solve(data, &solver, None)?;

    let mut rows: Vec<(String, f64)> = Vec::new();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    rows.push(("gradient_sup_at_fit".into(), sup(&loss_gradient(data, &fit.beta, tau)?)));
    let hessian = huber_hessian(data, &fit.beta, tau)?;
    let gram = gram_matrix(data);
    rows.push(("hessian_gram_max_abs_diff".into(), hessian.max_abs_diff(&gram)));
    let inside = data.residuals(&fit.beta)?.iter().filter(|r| r.abs() <= tau).count();
    rows.push(("fraction_residuals_within_tau".into(), inside as f64 / data.n() as f64));
    rows.push(("iterations".into(), fit.iterations as f64));
    rows.push(("final_residual".into(), fit.final_residuals().map_or(f64::NAN, |r| r.res)));

    if let Some(truth) = &prep.beta_star {
        rows.push(("gradient_sup_at_truth".into(), sup(&loss_gradient(data, truth, tau)?)));
        rows.push(("bregman_fit_truth".into(), bregman_symmetric(&fit.beta, truth, data, tau)?));
        rows.push(("estimation_error".into(), estimation_error(&fit.beta, truth)?));
        if solver.lambda1 > 0.0 {
            let cone = cone_report(data, &fit.beta, truth, tau, solver.lambda1, solver.lambda2)?;
            rows.push(("cone_gradient_condition".into(), f64::from(u8::from(cone.gradient_condition))));
            rows.push(("cone_off_support_l1".into(), cone.off_support));
            rows.push(("cone_on_support_l1".into(), cone.on_support));
            rows.push(("cone_constant".into(), cone.cone_constant));
            rows.push(("cone_inside".into(), f64::from(u8::from(cone.inside_cone))));
        }
        if data.p() <= RE_MAX_DIM {
            let support: Vec<usize> = truth.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
            let m = cfg.diagnose.re_max_support.unwrap_or(support.len().max(1));
            let c0 = fusedhuber_core::diagnostics::cone_constant(solver.lambda2 / solver.lambda1.max(f64::MIN_POSITIVE), fusedhuber_core::difference::DIFFERENCE_INF_NORM);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let re = restricted_eigenvalue_estimate(&hessian, &support, m, c0, cfg.diagnose.re_samples, &mut rng)?;
            rows.push(("re_rho_minus_estimate".into(), re.rho_minus));
            rows.push(("re_rho_plus_estimate".into(), re.rho_plus));
        }
    }
    out.write_csv("diagnostics.csv", &["metric", "value"], rows.into_iter().map(|(k, v)| vec![k, num(v)]))?;
    out.write_csv("hessian_gram.csv", &["i", "j", "hessian", "gram"], matrix_pairs(&hessian, &gram))?;

    if !cfg.diagnose.n_list.is_empty() {
        let rate = RateConfig {
            p: cfg.simulate.p,
            n_list: cfg.diagnose.n_list.clone(),
            n_test: cfg.simulate.n_test,
            rho: cfg.simulate.rho,
            noise: cfg.simulate.noise.parse::<NoiseLaw>()?,
            replications: cfg.replications,
            seed: cfg.seed,
            grid: cfg.grid.spec(),
        };
        let table = rate_experiment(&rate, &solver, workers(cfg))?;
        write_rate(&mut out, &table)?;
    }
    finish(out, Manifest::new("diagnose", cfg), 0)
}

fn matrix_pairs(a: &Matrix, b: &Matrix) -> Vec<Vec<String>> {
    let p = a.nrows();
    (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| vec![(i + 1).to_string(), (j + 1).to_string(), num(a.get(i, j)), num(b.get(i, j))])
        .collect()
}

pub fn run_command(command: Command, cfg: &RunConfig) -> Result<RunSummary, Error> {
    match command {
        Command::Simulate => run_simulate(cfg),
        Command::Fit => run_fit(cfg),
        Command::Tune => run_tune(cfg),
        Command::Bench => run_bench(cfg),
        Command::Diagnose => run_diagnose(cfg),
    }
}

