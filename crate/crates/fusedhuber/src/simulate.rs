//! Synthetic regression data: AR(1)-correlated Gaussian design, a sparse
//! piecewise-constant coefficient vector, and three noise laws.
//!
//! All draws come from `ChaCha8Rng` (rand_chacha 0.9.0, pinned) with one stream
//! per component, so a seed determines every array bit for bit and the training
//! design does not shift when the test size changes.

use std::fmt;
use std::str::FromStr;

use fusedhuber_core::{Coefficients, Matrix, ProblemData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Leading block of the true coefficients; the rest of the vector is zero.
pub const BETA_PATTERN: [f64; 11] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.5, 1.5, 1.5, 1.5];

/// Smallest dimension that fits [`BETA_PATTERN`] plus at least one zero.
pub const MIN_FEATURES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseLaw {
    Gaussian { sd: f64 },
    StudentT { df: f64 },
    LogNormal { mu: f64, sd: f64 },
}

impl NoiseLaw {
    pub const GAUSSIAN: NoiseLaw = NoiseLaw::Gaussian { sd: 0.05 };
    pub const STUDENT_T: NoiseLaw = NoiseLaw::StudentT { df: 1.5 };
    pub const LOGNORMAL: NoiseLaw = NoiseLaw::LogNormal { mu: 0.0, sd: 2.0 };

    pub fn all() -> [NoiseLaw; 3] {
        [Self::GAUSSIAN, Self::STUDENT_T, Self::LOGNORMAL]
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseLaw::Gaussian { .. } => "gaussian",
            NoiseLaw::StudentT { .. } => "t",
            NoiseLaw::LogNormal { .. } => "lognormal",
        }
    }

    fn validate(&self) -> Result<(), Error> {
        let ok = match *self {
            NoiseLaw::Gaussian { sd } => sd.is_finite() && sd >= 0.0,
            NoiseLaw::StudentT { df } => df.is_finite() && df > 0.0,
            NoiseLaw::LogNormal { mu, sd } => mu.is_finite() && sd.is_finite() && sd >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid noise parameters {self:?}")))
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, chi: Option<&ChiSquared<f64>>) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        match *self {
            NoiseLaw::Gaussian { sd } => sd * z,
            NoiseLaw::StudentT { df } => {
                let c = chi.expect("chi-squared law for t draws").sample(rng);
                z / (c / df).sqrt()
            }
            NoiseLaw::LogNormal { mu, sd } => (mu + sd * z).exp(),
        }
    }
}

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::GAUSSIAN),
            "t" | "student_t" | "student-t" => Ok(Self::STUDENT_T),
            "lognormal" => Ok(Self::LOGNORMAL),
            other => Err(Error::InvalidArgument(format!("unknown noise law {other:?} (expected gaussian, t or lognormal)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    pub rho: f64,
    pub noise: NoiseLaw,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n: 100, n_test: 100, p: 50, rho: 0.5, noise: NoiseLaw::GAUSSIAN, seed: 0 }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("training size must be positive".into()));
        }
        if self.p < MIN_FEATURES {
            return Err(Error::InvalidArgument(format!("p must be at least {MIN_FEATURES}, got {}", self.p)));
        }
        check_rho(self.rho)?;
        self.noise.validate()
    }
}

/// A generated instance.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub train: ProblemData,
    /// `None` when `n_test = 0`.
    pub test: Option<ProblemData>,
    pub beta_star: Coefficients,
}

// Stream assignment within one seed.
const TRAIN_DESIGN: u64 = 0;
const TRAIN_NOISE: u64 = 1;
const TEST_DESIGN: u64 = 2;
const TEST_NOISE: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_rho(rho: f64) -> Result<(), Error> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

pub fn make_beta_star(p: usize) -> Result<Coefficients, Error> {
    if p < MIN_FEATURES {
        return Err(Error::InvalidArgument(format!("p must be at least {MIN_FEATURES}, got {p}")));
    }
    let mut beta = vec![0.0; p];
    beta[..BETA_PATTERN.len()].copy_from_slice(&BETA_PATTERN);
    Ok(Coefficients::new(beta)?)
}

fn design_from(rng: &mut ChaCha8Rng, n: usize, p: usize, rho: f64) -> Matrix {
    let w = (1.0 - rho * rho).sqrt();
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        data.push(prev);
        for _ in 1..p {
            let e: f64 = rng.sample(StandardNormal);
            prev = rho * prev + w * e;
            data.push(prev);
        }
    }
    Matrix::from_row_major(n, p, data).expect("n * p entries")
}

fn noise_from(rng: &mut ChaCha8Rng, law: &NoiseLaw, n: usize) -> Vec<f64> {
    let chi = match *law {
        NoiseLaw::StudentT { df } => Some(ChiSquared::new(df).expect("validated degrees of freedom")),
        _ => None,
    };
    (0..n).map(|_| law.draw(rng, chi.as_ref())).collect()
}

/// Rows i.i.d. `N(0, Sigma)` with `Sigma_ij = rho^|i-j|`, via the AR(1) recursion
/// `x_1 = e_1`, `x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j`.
pub fn sample_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<Matrix, Error> {
    check_rho(rho)?;
    Ok(design_from(&mut rng_for(seed, TRAIN_DESIGN), n, p, rho))
}

pub fn sample_noise(law: &NoiseLaw, n: usize, seed: u64) -> Result<Vec<f64>, Error> {
    law.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("noise sample size must be positive".into()));
    }
    Ok(noise_from(&mut rng_for(seed, TRAIN_NOISE), law, n))
}

fn split(spec: &SyntheticSpec, beta: &[f64], n: usize, design_stream: u64, noise_stream: u64) -> Result<ProblemData, Error> {
    let x = design_from(&mut rng_for(spec.seed, design_stream), n, spec.p, spec.rho);
    let noise = noise_from(&mut rng_for(spec.seed, noise_stream), &spec.noise, n);
    let mut y = x.mul_vec(beta)?;
    for (yi, e) in y.iter_mut().zip(&noise) {
        *yi += e;
    }
    Ok(ProblemData::new(x, y)?)
}

/// `y = X beta* + eps` for independent training and test splits.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic, Error> {
    spec.validate()?;
    let beta_star = make_beta_star(spec.p)?;
    let train = split(spec, &beta_star, spec.n, TRAIN_DESIGN, TRAIN_NOISE)?;
    let test = if spec.n_test > 0 {
        Some(split(spec, &beta_star, spec.n_test, TEST_DESIGN, TEST_NOISE)?)
    } else {
        None
    };
    Ok(Synthetic { train, test, beta_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_star_pattern() {
        let b = make_beta_star(50).unwrap();
        assert_eq!(&b[..11], &BETA_PATTERN);
        assert!(b[11..].iter().all(|&v| v == 0.0));
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 11);
        let jumps: Vec<usize> = (0..49).filter(|&k| b[k + 1] != b[k]).collect();
        assert_eq!(jumps, vec![5, 6, 10]);
        assert!(make_beta_star(11).is_err());
        assert_eq!(make_beta_star(12).unwrap().len(), 12);
    }

    #[test]
    fn noise_law_parsing() {
        assert_eq!("gaussian".parse::<NoiseLaw>().unwrap(), NoiseLaw::GAUSSIAN);
        assert_eq!("T".parse::<NoiseLaw>().unwrap(), NoiseLaw::STUDENT_T);
        assert_eq!("lognormal".parse::<NoiseLaw>().unwrap(), NoiseLaw::LOGNORMAL);
        assert!("cauchy".parse::<NoiseLaw>().is_err());
        for law in NoiseLaw::all() {
            assert_eq!(law.name().parse::<NoiseLaw>().unwrap(), law);
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(sample_design(5, 5, 1.0, 0).is_err());
        assert!(sample_design(5, 5, -0.1, 0).is_err());
        assert!(sample_noise(&NoiseLaw::Gaussian { sd: -1.0 }, 5, 0).is_err());
        assert!(sample_noise(&NoiseLaw::STUDENT_T, 0, 0).is_err());
        assert!(generate(&SyntheticSpec { p: 11, ..SyntheticSpec::default() }).is_err());
        assert!(generate(&SyntheticSpec { n: 0, ..SyntheticSpec::default() }).is_err());
    }

    #[test]
    fn zero_test_size_skips_test_split() {
        let s = generate(&SyntheticSpec { n_test: 0, ..SyntheticSpec::default() }).unwrap();
        assert!(s.test.is_none());
    }
}
