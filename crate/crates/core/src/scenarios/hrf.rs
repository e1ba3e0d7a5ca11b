//! Double-gamma hemodynamic response model and the timing-varied HRF library.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::denoise::{svd_factors, Basis};
use crate::error::{invalid_param, Error, Result};
use crate::tensor::Tensor;

/// Fine grid step of the forward model, seconds.
pub const FINE_DT: f64 = 0.1;
/// Length of the sampled response, seconds; samples at 0, 1, …, 40.
pub const DURATION_S: f64 = 40.0;
pub const SAMPLES: usize = 41;
/// Taps of the 1-s boxcar on the fine grid.
const BOXCAR_TAPS: usize = 10;
const LIBRARY_SIZE: usize = 20;

/// Double-gamma parameters, in the usual SPM order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HrfParams {
    pub response_delay: f64,
    pub undershoot_delay: f64,
    pub response_dispersion: f64,
    pub undershoot_dispersion: f64,
    pub ratio: f64,
    pub onset: f64,
}

impl HrfParams {
    /// Ground truth of the timecourse simulation: strong undershoot.
    pub const TRUTH: HrfParams = HrfParams::from_array([6.0, 16.0, 1.0, 1.0, 2.0, 0.0]);
    /// Starting point of the parametric fit.
    pub const FIT_SEED: HrfParams = HrfParams::from_array([6.0, 16.0, 1.0, 1.0, 6.0, 0.0]);

    pub const fn from_array(p: [f64; 6]) -> Self {
        Self {
            response_delay: p[0],
            undershoot_delay: p[1],
            response_dispersion: p[2],
            undershoot_dispersion: p[3],
            ratio: p[4],
            onset: p[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.response_delay,
            self.undershoot_delay,
            self.response_dispersion,
            self.undershoot_dispersion,
            self.ratio,
            self.onset,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.to_array();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(invalid_param!("non-finite HRF parameters {p:?}"));
        }
        if p[..4].iter().any(|&v| v <= 0.0) {
            return Err(invalid_param!(
                "delays and dispersions must be > 0, got {:?}",
                &p[..4]
            ));
        }
        if p[4] == 0.0 {
            return Err(invalid_param!("response:undershoot ratio must be nonzero"));
        }
        Ok(())
    }
}

fn gamma_pdf(t: f64, shape: f64, scale: f64, ln_norm: f64) -> f64 {
    ((shape - 1.0) * t.ln() - t / scale - ln_norm).exp()
}

/// Double-gamma curve on `t_i = i·dt - onset`, zero for `t ≤ 0`, scaled to unit sum.
pub fn double_gamma(params: &HrfParams, dt: f64, duration: f64) -> Result<Tensor> {
    params.validate()?;
    if dt.is_nan() || dt <= 0.0 || duration.is_nan() || duration < dt {
        return Err(invalid_param!(
            "need dt > 0 and duration >= dt, got dt={dt}, duration={duration}"
        ));
    }
    let [p1, p2, p3, p4, p5, p6] = params.to_array();
    let (a1, a2) = (p1 / p3, p2 / p4);
    let norm1 = a1 * p3.ln() + ln_gamma(a1);
    let norm2 = a2 * p4.ln() + ln_gamma(a2);
    let n = (duration / dt + 1e-9).floor() as usize + 1;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt - p6;
            if t > 0.0 {
                gamma_pdf(t, a1, p3, norm1) - gamma_pdf(t, a2, p4, norm2) / p5
            } else {
                0.0
            }
        })
        .collect();
    let sum: f64 = h.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::Degenerate(format!(
            "double-gamma curve has nonpositive area {sum:e}"
        )));
    }
    h.iter_mut().for_each(|v| *v /= sum);
    Tensor::from_vec(h)
}

/// Response to a 1-s stimulus on the 1-s grid 0..=40 s, scaled to peak at 1.
pub fn hrf_from_params(params: &HrfParams) -> Result<Tensor> {
    let fine = double_gamma(params, FINE_DT, DURATION_S)?;
    let h = fine.values();
    let step = (1.0 / FINE_DT).round() as usize;
    let sampled: Vec<f64> = (0..SAMPLES)
        .map(|s| {
            let i = s * step;
            let lo = (i + 1).saturating_sub(BOXCAR_TAPS);
            h[lo..=i].iter().sum::<f64>() * FINE_DT
        })
        .collect();
    let peak = sampled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::Degenerate("response has no positive peak".into()));
    }
    Tensor::from_vec(sampled.iter().map(|v| v / peak).collect())
}

/// The 20 library members: response delay spread over 4–9 s, undershoot 10 s later.
pub fn hrf_library() -> Result<Vec<Tensor>> {
    (0..LIBRARY_SIZE)
        .map(|i| {
            let p1 = 4.0 + 5.0 * i as f64 / (LIBRARY_SIZE - 1) as f64;
            hrf_from_params(&HrfParams::from_array([p1, p1 + 10.0, 1.0, 1.0, 6.0, 0.0]))
        })
        .collect()
}

/// Top-`k` right singular vectors of the (uncentered) library.
pub fn hrf_basis(k: usize) -> Result<Basis> {
    if k == 0 || k > LIBRARY_SIZE {
        return Err(invalid_param!("basis size must lie in 1..={LIBRARY_SIZE}, got {k}"));
    }
    let lib = hrf_library()?;
    let rows: Vec<f64> = lib.iter().flat_map(|t| t.values().iter().copied()).collect();
    let m = DMatrix::from_row_slice(LIBRARY_SIZE, SAMPLES, &rows);
    let f = svd_factors(&m)?;
    Basis::new(f.v.columns(0, k).into_owned())
}
