//! Run configuration: an optional TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use fusedhuber_core::{LossKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::experiments::{BenchConfig, GridSpec};
use crate::simulate::{NoiseLaw, SyntheticSpec};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LossName {
    #[default]
    Huber,
    Squared,
}

impl From<LossName> for LossKind {
    fn from(l: LossName) -> Self {
        match l {
            LossName::Huber => LossKind::Huber,
            LossName::Squared => LossKind::Squared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrderName {
    #[default]
    None,
    Hierarchical,
}

/// Solver settings; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tau: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub sigma: Option<f64>,
    pub step_length: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub loss: Option<LossName>,
}

impl SolverSection {
    /// Fields set in `other` replace ours.
    pub fn merge(&mut self, other: &SolverSection) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(tau, lambda1, lambda2, sigma, step_length, tol, max_iter, loss);
    }

    pub fn resolve(&self) -> Result<SolverConfig, Error> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tau: self.tau.unwrap_or(d.tau),
            lambda1: self.lambda1.unwrap_or(d.lambda1),
            lambda2: self.lambda2.unwrap_or(d.lambda2),
            sigma: self.sigma.unwrap_or(d.sigma),
            step_length: self.step_length.unwrap_or(d.step_length),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            loss: self.loss.map_or(d.loss, LossKind::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Where the data comes from: a CSV file, or the simulator when `path` is unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub response: String,
    pub order: OrderName,
    pub normalize: bool,
    /// Share of rows used for training when a file is split for tuning.
    pub train_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { path: None, response: "y".into(), order: OrderName::None, normalize: false, train_fraction: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    pub rho: f64,
    pub noise: String,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self { n: s.n, n_test: s.n_test, p: s.p, rho: s.rho, noise: s.noise.name().into() }
    }
}

impl SimulateSection {
    pub fn spec(&self, seed: u64) -> Result<SyntheticSpec, Error> {
        let spec = SyntheticSpec { n: self.n, n_test: self.n_test, p: self.p, rho: self.rho, noise: self.noise.parse::<NoiseLaw>()?, seed };
        spec.validate()?;
        Ok(spec)
    }
}

/// Tuning grid. `taus` (absolute values) takes precedence over `tau_multipliers`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub taus: Option<Vec<f64>>,
    pub tau_multipliers: Option<Vec<f64>>,
    pub lambda1s: Option<Vec<f64>>,
    pub lambda2s: Option<Vec<f64>>,
}

impl GridSection {
    pub fn spec(&self) -> GridSpec {
        let d = GridSpec::default();
        GridSpec {
            tau_multipliers: self.tau_multipliers.clone().unwrap_or(d.tau_multipliers),
            lambda1s: self.lambda1s.clone().unwrap_or(d.lambda1s),
            lambda2s: self.lambda2s.clone().unwrap_or(d.lambda2s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub noises: Vec<String>,
    pub ps: Vec<usize>,
    pub compare_squared: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        let d = BenchConfig::default();
        Self { noises: d.noises.iter().map(|n| n.name().to_string()).collect(), ps: d.ps, compare_squared: d.compare_squared }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    /// Sample sizes for the error-rate experiment; empty skips it.
    pub n_list: Vec<usize>,
    /// Random directions per support superset in the restricted-eigenvalue estimate.
    pub re_samples: usize,
    /// Largest support size for the restricted-eigenvalue cone.
    pub re_max_support: Option<usize>,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self { n_list: Vec::new(), re_samples: 200, re_max_support: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub replications: usize,
    pub solver: SolverSection,
    pub data: DataSection,
    pub simulate: SimulateSection,
    pub grid: GridSection,
    pub bench: BenchSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            workers: 0,
            replications: BenchConfig::default().replications,
            solver: SolverSection::default(),
            data: DataSection::default(),
            simulate: SimulateSection::default(),
            grid: GridSection::default(),
            bench: BenchSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(Error::io(format!("reading {}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.solver.resolve()?;
        if let Some(p) = &self.data.path {
            if !p.exists() {
                return Err(Error::InvalidArgument(format!("data file {} does not exist", p.display())));
            }
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::InvalidArgument("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn bench_config(&self) -> Result<BenchConfig, Error> {
        let noises = self.bench.noises.iter().map(|s| s.parse::<NoiseLaw>()).collect::<Result<Vec<_>, _>>()?;
        Ok(BenchConfig {
            noises,
            ps: self.bench.ps.clone(),
            n: self.simulate.n,
            n_test: self.simulate.n_test,
            rho: self.simulate.rho,
            replications: self.replications,
            seed: self.seed,
            compare_squared: self.bench.compare_squared,
            grid: self.grid.spec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_toml() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            [solver]
            tau = 2.5
            loss = "squared"
            [grid]
            lambda1s = [0.1, 1.0]
            [bench]
            noises = ["t"]
            ps = [50]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        let s = cfg.solver.resolve().unwrap();
        assert_eq!(s.tau, 2.5);
        assert_eq!(s.loss, LossKind::Squared);
        assert_eq!(s.sigma, 0.1);
        assert_eq!(cfg.grid.spec().lambda1s, vec![0.1, 1.0]);
        assert_eq!(cfg.grid.spec().tau_multipliers.len(), 23);
        let b = cfg.bench_config().unwrap();
        assert_eq!(b.noises, vec![NoiseLaw::STUDENT_T]);
        assert_eq!(b.replications, 20);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("[solver]\nsigmaa = 1.0\n").is_err());
        let cfg = RunConfig::from_toml("[solver]\nsigma = -1.0\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn merge_prefers_later_values() {
        let mut a = SolverSection { tau: Some(1.0), lambda1: Some(0.5), ..Default::default() };
        a.merge(&SolverSection { tau: Some(3.0), ..Default::default() });
        assert_eq!(a.tau, Some(3.0));
        assert_eq!(a.lambda1, Some(0.5));
    }
}
