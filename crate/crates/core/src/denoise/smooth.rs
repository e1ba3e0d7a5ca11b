use crate::error::{invalid_param, Result};
use crate::tensor::Tensor;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2·sqrt(2·ln 2)

/// Gaussian sigma in voxels for a kernel of `fwhm_mm` on a `voxel_mm` grid.
pub fn fwhm_to_sigma(fwhm_mm: f64, voxel_mm: f64) -> f64 {
    fwhm_mm / (voxel_mm * FWHM_PER_SIGMA)
}

/// Unnormalized taps `exp(-k²/2σ²)` for `k = -R..=R`, `R = ⌈4σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Correlate `src` with `taps` (centered) along one axis, renormalizing the
/// taps that fall inside the array. `inner` is the stride of the axis.
///
/// Accumulates weighted differences from the centre sample, so constant
/// lines come back bit-identical.
fn convolve_axis(src: &[f64], dst: &mut [f64], len: usize, inner: usize, taps: &[f64]) {
    let radius = (taps.len() / 2) as isize;
    let outer = src.len() / (len * inner);
    dst.copy_from_slice(src);
    for o in 0..outer {
        let block = o * len * inner;
        for k in 0..len as isize {
            let lo = (k - radius).max(0);
            let hi = (k + radius).min(len as isize - 1);
            let norm: f64 = (lo..=hi).map(|j| taps[(j - k + radius) as usize]).sum();
            let out = block + k as usize * inner;
            for j in lo..=hi {
                if j == k {
                    continue;
                }
                let coef = taps[(j - k + radius) as usize] / norm;
                let inp = block + j as usize * inner;
                for i in 0..inner {
                    dst[out + i] += coef * (src[inp + i] - src[out + i]);
                }
            }
        }
    }
}

/// Separable isotropic Gaussian over every axis of `t`, sigma in samples.
pub fn gaussian_smooth(t: &Tensor, sigma: f64) -> Result<Tensor> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(invalid_param!("gaussian sigma must be finite and >= 0, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(t.clone());
    }
    let values = smooth_values(t.values(), t.dims(), sigma);
    t.with_values(values)
}

pub(crate) fn smooth_values(values: &[f64], dims: &[usize], sigma: f64) -> Vec<f64> {
    let taps = gaussian_kernel(sigma);
    let strides = crate::tensor::strides_of(dims);
    let mut cur = values.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (axis, &len) in dims.iter().enumerate() {
        if len == 1 {
            continue;
        }
        convolve_axis(&cur, &mut next, len, strides[axis], &taps);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Gaussian smoothing of a volume with a kernel given as FWHM in millimetres.
pub fn gaussian_smooth_3d(vol: &Tensor, fwhm_mm: f64, voxel_mm: f64) -> Result<Tensor> {
    vol.expect_ndim(3, "gaussian_smooth_3d")?;
    if !fwhm_mm.is_finite() || fwhm_mm < 0.0 {
        return Err(invalid_param!("fwhm must be finite and >= 0, got {fwhm_mm}"));
    }
    if !voxel_mm.is_finite() || voxel_mm <= 0.0 {
        return Err(invalid_param!("voxel size must be > 0, got {voxel_mm}"));
    }
    gaussian_smooth(vol, fwhm_to_sigma(fwhm_mm, voxel_mm))
}

/// Moving average of odd `width` along the last axis. Near the ends the
/// window keeps only in-range samples and averages those.
pub fn boxcar_smooth(series: &Tensor, width: usize) -> Result<Tensor> {
    if series.ndim() > 2 {
        return Err(crate::error::Error::Shape(format!(
            "boxcar smoothing takes a series or a matrix of rows, got dims {:?}",
            series.dims()
        )));
    }
    let len = *series.dims().last().expect("at least one axis");
    if width.is_multiple_of(2) {
        return Err(invalid_param!("boxcar width must be odd and >= 1, got {width}"));
    }
    if width > len {
        return Err(invalid_param!("boxcar width {width} exceeds series length {len}"));
    }
    let taps = vec![1.0; width];
    let mut out = vec![0.0; series.len()];
    convolve_axis(series.values(), &mut out, len, 1, &taps);
    series.with_values(out)
}
