//! Synthetic head phantom standing in for a real anatomical scan.
//!
//! Nested ellipsoids: a CSF ribbon under the brain boundary, a gray-matter
//! layer, and a white-matter core whose surface is folded by a product of
//! sinusoids so the gray/white interface has fine structure. The atlas is
//! the same construction blurred and shifted one voxel along x.

use crate::denoise::gaussian_smooth;
use crate::error::{invalid_param, Result};
use crate::tensor::Tensor;

pub const BACKGROUND: f64 = 0.0;
pub const CSF: f64 = 200.0;
pub const GRAY: f64 = 700.0;
pub const WHITE: f64 = 1100.0;
pub const VOXEL_MM: f64 = 0.8;
const MIN_SIZE: usize = 32;

/// Brain ellipsoid semi-axes as fractions of the half-width (z, y, x).
const BRAIN_AXES: [f64; 3] = [0.80, 0.85, 0.92];
/// Ellipsoidal radius where the CSF ribbon begins.
const CSF_INNER: f64 = 0.92;
/// Mean ellipsoidal radius of the white-matter surface and its folding.
const WHITE_RADIUS: f64 = 0.62;
const FOLD_DEPTH: f64 = 0.22;
const FOLD_FREQ: f64 = 7.0;
/// Atlas blur, FWHM in voxels.
const ATLAS_FWHM_VOX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeBundle {
    pub volume: Tensor,
    pub brain_mask: Vec<bool>,
    /// 0 background, 1 gray, 2 white, 3 CSF.
    pub segmentation: Tensor,
    pub atlas: Tensor,
    pub voxel_mm: f64,
}

impl VolumeBundle {
    /// The volume with the brain mask attached, ready to serve as ground truth.
    pub fn masked_truth(&self) -> Tensor {
        self.volume
            .clone()
            .with_mask(self.brain_mask.clone())
            .expect("mask built with the volume")
    }
}

fn label_at(z: f64, y: f64, x: f64) -> u8 {
    let r = ((z / BRAIN_AXES[0]).powi(2) + (y / BRAIN_AXES[1]).powi(2) + (x / BRAIN_AXES[2]).powi(2))
        .sqrt();
    if r >= 1.0 {
        return 0;
    }
    if r >= CSF_INNER {
        return 3;
    }
    let rho = (z * z + y * y + x * x).sqrt().max(1e-12);
    let polar = (z / rho).clamp(-1.0, 1.0).acos();
    let azimuth = y.atan2(x);
    let fold = (FOLD_FREQ * polar).sin() * (FOLD_FREQ * azimuth).sin();
    if r < WHITE_RADIUS * (1.0 + FOLD_DEPTH * fold) {
        2
    } else {
        1
    }
}

fn build(n: usize, shift_x: f64) -> (Vec<f64>, Vec<f64>) {
    let half = n as f64 / 2.0;
    let center = (n as f64 - 1.0) / 2.0;
    let mut intensity = Vec::with_capacity(n * n * n);
    let mut labels = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let l = label_at(
                    (z as f64 - center) / half,
                    (y as f64 - center) / half,
                    (x as f64 - center - shift_x) / half,
                );
                labels.push(l as f64);
                intensity.push(match l {
                    1 => GRAY,
                    2 => WHITE,
                    3 => CSF,
                    _ => BACKGROUND,
                });
            }
        }
    }
    (intensity, labels)
}

pub fn phantom_bundle(n: usize) -> Result<VolumeBundle> {
    if n < MIN_SIZE {
        return Err(invalid_param!("phantom grid must be at least {MIN_SIZE}, got {n}"));
    }
    let dims = vec![n, n, n];
    let (intensity, labels) = build(n, 0.0);
    let brain_mask = labels.iter().map(|&l| l != 0.0).collect();
    let (shifted, _) = build(n, 1.0);
    let atlas = gaussian_smooth(
        &Tensor::new(dims.clone(), shifted)?,
        ATLAS_FWHM_VOX / 2.354_820_045_030_949_3,
    )?;
    Ok(VolumeBundle {
        volume: Tensor::new(dims.clone(), intensity)?,
        brain_mask,
        segmentation: Tensor::new(dims, labels)?,
        atlas,
        voxel_mm: VOXEL_MM,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pearson;

    #[test]
    fn intensities_and_labels() {
        let b = phantom_bundle(32).unwrap();
        assert!(b.volume.values().iter().all(|&v| (0.0..=1400.0).contains(&v)));
        assert!(b.atlas.values().iter().all(|&v| (0.0..=1400.0).contains(&v)));
        for (i, &l) in b.segmentation.values().iter().enumerate() {
            assert_eq!(l != 0.0, b.brain_mask[i]);
        }
        let mean_of = |label: f64| {
            let (s, n) = b
                .volume
                .values()
                .iter()
                .zip(b.segmentation.values())
                .filter(|(_, &l)| l == label)
                .fold((0.0, 0), |(s, n), (&v, _)| (s + v, n + 1));
            assert!(n > 0);
            s / n as f64
        };
        assert!(mean_of(2.0) - mean_of(1.0) >= 200.0);
        assert!(mean_of(3.0) > 0.0);
        assert!(phantom_bundle(31).is_err());
    }

    #[test]
    fn atlas_close_but_not_equal() {
        let b = phantom_bundle(48).unwrap();
        assert_ne!(b.atlas, b.volume);
        let idx: Vec<usize> = (0..b.brain_mask.len()).filter(|&i| b.brain_mask[i]).collect();
        let v: Vec<f64> = idx.iter().map(|&i| b.volume.values()[i]).collect();
        let a: Vec<f64> = idx.iter().map(|&i| b.atlas.values()[i]).collect();
        let r = pearson(&v, &a).unwrap();
        assert!(r > 0.8 && r < 0.999, "r = {r}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(phantom_bundle(32).unwrap(), phantom_bundle(32).unwrap());
    }
}
