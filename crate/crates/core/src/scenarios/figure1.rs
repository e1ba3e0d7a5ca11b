//! The 2×2 bias/variance illustration: Gaussian draws around a truth of 2.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::mse_decompose;
use crate::par::Executor;
use crate::rng::{substream, RngState};

pub const TRUTH: f64 = 2.0;
pub const DRAWS: usize = 30;
pub const MEANS: [f64; 2] = [2.0, 4.0];
pub const VARIANCES: [f64; 2] = [0.3, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantRecord {
    pub mean: f64,
    pub variance: f64,
    pub draws: Vec<f64>,
    /// Sample mean minus truth.
    pub estimated_bias: f64,
    /// Spread around the sample mean, divisor n.
    pub estimated_variance: f64,
    pub mse: f64,
}

/// Quadrants in order (mean 2, var 0.3), (mean 4, var 0.3), (mean 2, var 8), (mean 4, var 8).
pub fn quadrants() -> [(f64, f64); 4] {
    let mut q = [(0.0, 0.0); 4];
    for (r, &v) in VARIANCES.iter().enumerate() {
        for (c, &m) in MEANS.iter().enumerate() {
            q[r * 2 + c] = (m, v);
        }
    }
    q
}

pub fn quadrant_name(mean: f64, variance: f64) -> String {
    format!("mean{mean}-var{variance}")
}

pub fn draw_quadrant(rng: &mut RngState, mean: f64, variance: f64, n: usize) -> Result<QuadrantRecord> {
    let draws = crate::rng::sample_gaussian(rng, mean, variance.sqrt(), n)?;
    let d = mse_decompose(&draws, TRUTH)?;
    let sample_mean = draws.iter().sum::<f64>() / n as f64;
    Ok(QuadrantRecord {
        mean,
        variance,
        draws,
        estimated_bias: sample_mean - TRUTH,
        estimated_variance: d.variance,
        mse: d.mse,
    })
}

/// One realization of the four quadrants; quadrant `q` uses `substream(seed, q)`.
pub fn figure1_demo(seed: u64) -> Result<Vec<QuadrantRecord>> {
    quadrants()
        .iter()
        .enumerate()
        .map(|(q, &(mean, var))| draw_quadrant(&mut substream(seed, q as u64), mean, var, DRAWS))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantAverage {
    pub mean: f64,
    pub variance: f64,
    pub mean_mse: f64,
    /// Population value `(mean - truth)² + variance`.
    pub expected_mse: f64,
}

/// Average MSE of each quadrant over `reps` independent realizations.
pub fn figure1_replicated(exec: &Executor, reps: usize, seed: u64) -> Result<Vec<QuadrantAverage>> {
    let quads = quadrants();
    let per_rep = exec.try_map(reps, |r| {
        quads
            .iter()
            .enumerate()
            .map(|(q, &(mean, var))| {
                let mut rng = substream(seed, (r * quads.len() + q) as u64);
                draw_quadrant(&mut rng, mean, var, DRAWS).map(|rec| rec.mse)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(quads
        .iter()
        .enumerate()
        .map(|(q, &(mean, variance))| QuadrantAverage {
            mean,
            variance,
            mean_mse: per_rep.iter().map(|r| r[q]).sum::<f64>() / reps as f64,
            expected_mse: (mean - TRUTH).powi(2) + variance,
        })
        .collect())
}
