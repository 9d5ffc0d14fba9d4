//! Output files: CSV tables, the JSON run manifest, and a timestamped run log.
//!
//! Everything except `run.log` and `timing.csv` is a pure function of the
//! configuration and seed, so reruns produce identical bytes.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fusedhuber_core::solver::KktResiduals;
use fusedhuber_core::tune::TuneOutcome;
use serde::Serialize;

use crate::config::RunConfig;
use crate::experiments::{BenchReport, CoefficientProfile, RateTable};
use crate::Error;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, Error> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(Error::io(format!("creating {}", root.display())))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Records a file written by someone else into this directory.
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, Error>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(Error::io(format!("creating {}", path.display())))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("writing {name}: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(Error::io(format!("writing {}", path.display())))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, Error> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(format!("serializing {name}: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(Error::io(format!("writing {}", path.display())))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    /// Appends a timestamped line to `run.log`.
    pub fn log(&self, message: &str) -> Result<(), Error> {
        let path = self.path("run.log");
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(Error::io(format!("opening {}", path.display())))?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        writeln!(f, "{now:.3} {message}").map_err(Error::io("writing run.log"))
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    /// Per-replication seeds, when the command runs replications.
    pub seeds: Vec<u64>,
    pub rng: &'static str,
    pub config: &'a RunConfig,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            seeds: Vec::new(),
            rng: "ChaCha8Rng (rand_chacha 0.9.0), one stream per data component",
            config,
            outputs: Vec::new(),
        }
    }
}

pub fn coefficient_rows(names: &[String], beta: &[f64], truth: Option<&[f64]>) -> Vec<Vec<String>> {
    beta.iter()
        .enumerate()
        .map(|(j, b)| {
            let mut row = vec![(j + 1).to_string(), names[j].clone(), num(*b)];
            if let Some(t) = truth {
                row.push(num(t[j]));
            }
            row
        })
        .collect()
}

pub fn history_rows(history: &[KktResiduals]) -> Vec<Vec<String>> {
    history
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![(k + 1).to_string(), num(r.phi_mu), num(r.phi_z), num(r.phi_alpha), num(r.phi_beta), num(r.phi_gamma), num(r.res)]
        })
        .collect()
}

pub const HISTORY_HEADER: [&str; 7] = ["iteration", "phi_mu", "phi_z", "phi_alpha", "phi_beta", "phi_gamma", "res"];

pub fn score_rows(outcome: &TuneOutcome) -> Vec<Vec<String>> {
    outcome
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let base = vec![num(r.cell.tau), num(r.cell.lambda1), num(r.cell.lambda2)];
            let rest = match &r.outcome {
                Ok(s) => vec![
                    num(s.mae),
                    s.estimation_error.map(num).unwrap_or_default(),
                    s.iterations.to_string(),
                    format!("{:?}", s.status).to_lowercase(),
                    String::new(),
                ],
                Err(e) => vec![String::new(), String::new(), String::new(), "failed".into(), e.to_string()],
            };
            let selected = if i == outcome.best_index { "1" } else { "0" };
            base.into_iter().chain(rest).chain([selected.to_string()]).collect()
        })
        .collect()
}

pub const SCORE_HEADER: [&str; 9] = ["tau", "lambda1", "lambda2", "validation_mae", "estimation_error", "iterations", "status", "error", "selected"];

/// `summary.csv`, `replications.csv`, `timing.csv` and one coefficient file per cell.
pub fn write_bench(out: &mut OutputDir, report: &BenchReport) -> Result<(), Error> {
    out.write_csv(
        "summary.csv",
        &["noise", "p", "method", "metric", "value"],
        report.summary.iter().map(|r| vec![r.noise.name().into(), r.p.to_string(), r.method.name().into(), r.metric.into(), num(r.value)]),
    )?;
    out.write_csv(
        "replications.csv",
        &["noise", "p", "method", "replication", "seed", "mse", "std", "mae", "tau", "lambda1", "lambda2", "iterations", "converged", "error"],
        report.records.iter().map(|r| {
            let head = vec![r.noise.name().into(), r.p.to_string(), r.method.name().into(), r.replication.to_string(), r.seed.to_string()];
            let tail = match &r.outcome {
                Ok(o) => vec![
                    num(o.estimation_error),
                    num(o.residual_std),
                    num(o.mae),
                    num(o.config.tau),
                    num(o.config.lambda1),
                    num(o.config.lambda2),
                    o.iterations.to_string(),
                    o.converged.to_string(),
                    String::new(),
                ],
                Err(e) => {
                    let mut v = vec![String::new(); 8];
                    v.push(e.clone());
                    v
                }
            };
            head.into_iter().chain(tail).collect()
        }),
    )?;
    out.write_csv(
        "timing.csv",
        &["noise", "p", "method", "metric", "value"],
        crate::experiments::timing_summary(report).into_iter().flat_map(|(noise, p, m, mean, sd)| {
            [("cpu", mean), ("cpu_sd", sd)].map(|(k, v)| vec![noise.name().into(), p.to_string(), m.name().into(), k.into(), num(v)])
        }),
    )?;
    for profile in &report.profiles {
        write_profile(out, profile)?;
    }
    Ok(())
}

fn write_profile(out: &mut OutputDir, profile: &CoefficientProfile) -> Result<(), Error> {
    let mut header = vec!["index", "truth"];
    header.extend(profile.fits.iter().map(|(m, _)| m.name()));
    let rows = (0..profile.truth.len()).map(|j| {
        let mut row = vec![(j + 1).to_string(), num(profile.truth[j])];
        row.extend(profile.fits.iter().map(|(_, b)| num(b[j])));
        row
    });
    out.write_csv(&format!("coefficients_{}_p{}.csv", profile.noise.name(), profile.p), &header, rows)?;
    Ok(())
}

pub fn write_rate(out: &mut OutputDir, table: &RateTable) -> Result<(), Error> {
    out.write_csv(
        "rate.csv",
        &["n", "median_error", "errors"],
        table.rows.iter().map(|r| {
            vec![r.n.to_string(), num(r.median_error), r.errors.iter().map(|e| num(*e)).collect::<Vec<_>>().join(";")]
        }),
    )?;
    out.write_csv(
        "rate_slope.csv",
        &["slope", "defined"],
        [vec![table.slope.map(num).unwrap_or_default(), table.slope.is_some().to_string()]],
    )?;
    Ok(())
}
