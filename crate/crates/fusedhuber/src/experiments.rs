//! Simulate -> tune -> solve pipelines: the benchmark table and the
//! error-versus-sample-size experiment.

use std::time::{Duration, Instant};

use fusedhuber_core::diagnostics::loglog_slope;
use fusedhuber_core::metrics::{estimation_error, mae, residual_std};
use fusedhuber_core::solver::solve;
use fusedhuber_core::tune::{default_lambda_grid, TuneGrid};
use fusedhuber_core::{Coefficients, LossKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::parallel::{parallel_map, parallel_grid_search};
use crate::simulate::{generate, NoiseLaw, Synthetic, SyntheticSpec};
use crate::Error;

/// Tuning grid in scale-free form: `tau = a sqrt(n / ln p)` for each `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub tau_multipliers: Vec<f64>,
    pub lambda1s: Vec<f64>,
    pub lambda2s: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tau_multipliers: (0..23).map(|k| (40 + 5 * k) as f64 / 100.0).collect(),
            lambda1s: default_lambda_grid(),
            lambda2s: default_lambda_grid(),
        }
    }
}

impl GridSpec {
    /// Concrete grid for `(n, p)`. Under the squared loss `tau` is irrelevant and
    /// a single placeholder value is used.
    pub fn resolve(&self, n: usize, p: usize, loss: LossKind) -> Result<TuneGrid, Error> {
        if p < 2 {
            return Err(Error::InvalidArgument("grid needs p >= 2".into()));
        }
        let scale = (n as f64 / (p as f64).ln()).sqrt();
        let taus = match loss {
            LossKind::Huber => self.tau_multipliers.iter().map(|a| a * scale).collect(),
            LossKind::Squared => vec![1.0],
        };
        Ok(TuneGrid::new(taus, self.lambda1s.clone(), self.lambda2s.clone())?)
    }
}

/// One tuned fit on a synthetic instance, scored against the truth.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub config: SolverConfig,
    pub beta: Coefficients,
    pub estimation_error: f64,
    /// Test-set mean absolute error.
    pub mae: f64,
    /// Sample standard deviation of the test-set residuals.
    pub residual_std: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall time of one solve at the selected parameters.
    pub solve_time: Duration,
}

/// Tunes on the training split, scoring by test MAE, then re-solves once at the
/// selected parameters to time it.
pub fn tuned_fit(data: &Synthetic, grid: &GridSpec, base: &SolverConfig, workers: usize) -> Result<PipelineResult, Error> {
    let test = data.test.as_ref().ok_or_else(|| Error::InvalidArgument("tuning needs a test split (n_test > 0)".into()))?;
    let tune_grid = grid.resolve(data.train.n(), data.train.p(), base.loss)?;
    let outcome = parallel_grid_search(&data.train, test, &tune_grid, base, Some(&data.beta_star), workers)?;
    let start = Instant::now();
    let fit = solve(&data.train, &outcome.best, None)?;
    let solve_time = start.elapsed();
    Ok(PipelineResult {
        config: outcome.best,
        estimation_error: estimation_error(&fit.beta, &data.beta_star)?,
        mae: mae(test, &fit.beta)?,
        residual_std: residual_std(test, &fit.beta)?,
        iterations: fit.iterations,
        converged: fit.converged(),
        beta: fit.beta,
        solve_time,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Errors below this are treated as exact recovery when fitting rates.
pub const ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub p: usize,
    pub n_list: Vec<usize>,
    pub n_test: usize,
    pub rho: f64,
    pub noise: NoiseLaw,
    pub replications: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub errors: Vec<f64>,
    pub median_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of log median error on log n; `None` when undefined
    /// (fewer than two sample sizes, or errors at the floor).
    pub slope: Option<f64>,
}

/// For each `n`, `replications` independent simulate -> tune -> solve runs with
/// seeds `seed + r`; records the median estimation error and the log-log slope.
pub fn rate_experiment(cfg: &RateConfig, base: &SolverConfig, workers: usize) -> Result<RateTable, Error> {
    if cfg.n_list.is_empty() || cfg.replications == 0 {
        return Err(Error::InvalidArgument("rate experiment needs sample sizes and replications".into()));
    }
    let tasks: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.replications as u64).map(move |r| (n, r)))
        .collect();
    let results = parallel_map(&tasks, workers, |&(n, r)| -> Result<f64, Error> {
        let spec = SyntheticSpec { n, n_test: cfg.n_test, p: cfg.p, rho: cfg.rho, noise: cfg.noise, seed: cfg.seed.wrapping_add(r) };
        let data = generate(&spec)?;
        Ok(tuned_fit(&data, &cfg.grid, base, 1)?.estimation_error)
    });
    let errors = results.into_iter().collect::<Result<Vec<f64>, Error>>()?;

    let rows: Vec<RateRow> = cfg
        .n_list
        .iter()
        .zip(errors.chunks(cfg.replications))
        .map(|(&n, e)| RateRow { n, errors: e.to_vec(), median_error: median(e).unwrap_or(f64::NAN) })
        .collect();
    let medians: Vec<f64> = rows.iter().map(|r| r.median_error).collect();
    let slope = if medians.iter().any(|m| !(*m > ERROR_FLOOR)) {
        None
    } else {
        loglog_slope(&cfg.n_list, &medians)?
    };
    Ok(RateTable { rows, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub noises: Vec<NoiseLaw>,
    pub ps: Vec<usize>,
    pub n: usize,
    pub n_test: usize,
    pub rho: f64,
    pub replications: usize,
    pub seed: u64,
    /// Also fit the least-squares fused lasso on every replication.
    pub compare_squared: bool,
    pub grid: GridSpec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            noises: NoiseLaw::all().to_vec(),
            ps: vec![50, 200, 400],
            n: 100,
            n_test: 100,
            rho: 0.5,
            replications: 20,
            seed: 0,
            compare_squared: true,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Huber,
    Squared,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Huber => "huber",
            Method::Squared => "squared",
        }
    }

    fn loss(&self) -> LossKind {
        match self {
            Method::Huber => LossKind::Huber,
            Method::Squared => LossKind::Squared,
        }
    }
}

/// One (noise, p, method, replication) run.
#[derive(Debug, Clone)]
pub struct ReplicationRecord {
    pub noise: NoiseLaw,
    pub p: usize,
    pub method: Method,
    pub replication: usize,
    pub seed: u64,
    pub outcome: Result<PipelineResult, String>,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub noise: NoiseLaw,
    pub p: usize,
    pub method: Method,
    pub metric: &'static str,
    pub value: f64,
}

/// Coefficients of the first replication, per cell, for plotting against the truth.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    pub noise: NoiseLaw,
    pub p: usize,
    pub truth: Vec<f64>,
    /// `(method, coefficients)`; absent when that fit failed.
    pub fits: Vec<(Method, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub records: Vec<ReplicationRecord>,
    pub summary: Vec<SummaryRow>,
    pub profiles: Vec<CoefficientProfile>,
}

impl BenchReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Runs every (noise, p, method, replication) combination, `workers` at a time.
/// Failures are recorded per run; summaries cover the successful runs.
pub fn run_bench(cfg: &BenchConfig, base: &SolverConfig, workers: usize) -> Result<BenchReport, Error> {
    if cfg.replications == 0 || cfg.noises.is_empty() || cfg.ps.is_empty() {
        return Err(Error::InvalidArgument("bench needs noise laws, dimensions and replications".into()));
    }
    let mut methods = vec![Method::Huber];
    if cfg.compare_squared {
        methods.push(Method::Squared);
    }
    let mut tasks = Vec::new();
    for &noise in &cfg.noises {
        for &p in &cfg.ps {
            for &method in &methods {
                for r in 0..cfg.replications {
                    tasks.push((noise, p, method, r));
                }
            }
        }
    }
    let records = parallel_map(&tasks, workers, |&(noise, p, method, r)| {
        let seed = cfg.seed.wrapping_add(r as u64);
        let spec = SyntheticSpec { n: cfg.n, n_test: cfg.n_test, p, rho: cfg.rho, noise, seed };
        let outcome = generate(&spec)
            .and_then(|data| tuned_fit(&data, &cfg.grid, &base.with_loss(method.loss()), 1))
            .map_err(|e| e.to_string());
        ReplicationRecord { noise, p, method, replication: r, seed, outcome }
    });

    let mut summary = Vec::new();
    let mut profiles = Vec::new();
    for &noise in &cfg.noises {
        for &p in &cfg.ps {
            let mut fits = Vec::new();
            for &method in &methods {
                let ok: Vec<&PipelineResult> = records
                    .iter()
                    .filter(|r| r.noise == noise && r.p == p && r.method == method)
                    .filter_map(|r| r.outcome.as_ref().ok())
                    .collect();
                let failed = cfg.replications - ok.len();
                let row = |metric, value| SummaryRow { noise, p, method, metric, value };
                if !ok.is_empty() {
                    let (mse, mse_sd) = mean_sd(&ok.iter().map(|r| r.estimation_error).collect::<Vec<_>>());
                    let (std, std_sd) = mean_sd(&ok.iter().map(|r| r.residual_std).collect::<Vec<_>>());
                    let (m, _) = mean_sd(&ok.iter().map(|r| r.mae).collect::<Vec<_>>());
                    summary.extend([row("mse", mse), row("mse_sd", mse_sd), row("std", std), row("std_sd", std_sd), row("mae", m)]);
                }
                summary.push(row("failures", failed as f64));
                let first = records
                    .iter()
                    .find(|r| r.noise == noise && r.p == p && r.method == method && r.replication == 0)
                    .and_then(|r| r.outcome.as_ref().ok());
                if let Some(fit) = first {
                    fits.push((method, fit.beta.to_vec()));
                }
            }
            let truth = crate::simulate::make_beta_star(p)?.into_vec();
            profiles.push(CoefficientProfile { noise, p, truth, fits });
        }
    }
    Ok(BenchReport { records, summary, profiles })
}

/// Mean and standard deviation of the timed solve per cell, in seconds.
pub fn timing_summary(report: &BenchReport) -> Vec<(NoiseLaw, usize, Method, f64, f64)> {
    let mut keys: Vec<(NoiseLaw, usize, Method)> = Vec::new();
    for r in &report.records {
        if !keys.contains(&(r.noise, r.p, r.method)) {
            keys.push((r.noise, r.p, r.method));
        }
    }
    keys.into_iter()
        .filter_map(|(noise, p, method)| {
            let t: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.noise == noise && r.p == p && r.method == method)
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.solve_time.as_secs_f64()))
                .collect();
            (!t.is_empty()).then(|| {
                let (m, s) = mean_sd(&t);
                (noise, p, method, m, s)
            })
        })
        .collect()
}
