//! Noise models and dataset assembly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::par::Executor;
use crate::rng::{substream, RngState};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    IidGaussian { sigma: f64 },
    /// Gaussian noise convolved with a boxcar of `boxcar_width` samples and unit integral.
    CorrelatedGaussian { sigma: f64, boxcar_width: usize },
}

impl NoiseSpec {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseSpec::IidGaussian { sigma } | NoiseSpec::CorrelatedGaussian { sigma, .. } => {
                sigma
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = self.sigma();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid_param!("noise sigma must be finite and > 0, got {sigma}"));
        }
        if let NoiseSpec::CorrelatedGaussian { boxcar_width, .. } = *self {
            if boxcar_width == 0 {
                return Err(invalid_param!("boxcar width must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, truth: &Tensor, rng: &mut RngState) -> Result<Tensor> {
        match *self {
            NoiseSpec::IidGaussian { sigma } => add_iid_noise(truth, sigma, rng),
            NoiseSpec::CorrelatedGaussian {
                sigma,
                boxcar_width,
            } => add_correlated_noise(truth, sigma, boxcar_width, rng),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid_param!("noise sigma must be finite and > 0, got {sigma}"));
    }
    Ok(())
}

/// `truth` plus independent Normal(0, sigma²) per element.
pub fn add_iid_noise(truth: &Tensor, sigma: f64, rng: &mut RngState) -> Result<Tensor> {
    check_sigma(sigma)?;
    let values = truth
        .values()
        .iter()
        .map(|&y| y + sigma * rng.standard_normal())
        .collect();
    truth.with_values(values)
}

/// `truth` plus Normal(0, sigma²) noise smoothed by a centered boxcar of
/// `width` taps, each `1/width`. Taps falling outside the series read zero.
pub fn add_correlated_noise(
    truth: &Tensor,
    sigma: f64,
    width: usize,
    rng: &mut RngState,
) -> Result<Tensor> {
    check_sigma(sigma)?;
    truth.expect_ndim(1, "correlated noise")?;
    let n = truth.len();
    if width == 0 || width > n {
        return Err(invalid_param!(
            "boxcar width must be in 1..={n}, got {width}"
        ));
    }
    let mut white = vec![0.0; n];
    rng.fill_standard_normal(&mut white);
    let offset = (width - 1) / 2;
    let tap = sigma / width as f64;
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(offset);
            let hi = (i + width - offset).min(n);
            let s: f64 = white[lo..hi].iter().sum();
            truth.values()[i] + tap * s
        })
        .collect();
    truth.with_values(values)
}

/// One ground truth with `m` noisy measurements of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub truth: Tensor,
    pub measurements: Vec<Tensor>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Dataset {
    pub fn m(&self) -> usize {
        self.measurements.len()
    }
}

pub fn generate_measurements(
    truth: &Tensor,
    noise: NoiseSpec,
    m: usize,
    seed: u64,
) -> Result<Dataset> {
    generate_measurements_with(&Executor::sequential(), truth, noise, m, seed)
}

/// Measurement `k` draws from `substream(seed, k)`.
pub fn generate_measurements_with(
    exec: &Executor,
    truth: &Tensor,
    noise: NoiseSpec,
    m: usize,
    seed: u64,
) -> Result<Dataset> {
    if m < 2 {
        return Err(invalid_param!("need at least 2 measurements, got {m}"));
    }
    noise.validate()?;
    if truth.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite ground truth".into()));
    }
    let measurements = exec.try_map(m, |k| {
        let mut rng = substream(seed, k as u64);
        noise.apply(truth, &mut rng)
    })?;
    Ok(Dataset {
        truth: truth.clone(),
        measurements,
        noise,
        seed,
    })
}
