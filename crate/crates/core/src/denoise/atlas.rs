use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const GRAY_LABEL: f64 = 1.0;
pub const WHITE_LABEL: f64 = 2.0;

/// Affine map taking atlas intensities onto the measurement's tissue means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasFit {
    pub scale: f64,
    pub offset: f64,
}

fn label_mean(values: &[f64], seg: &[f64], label: f64) -> Option<f64> {
    let (sum, n) = values
        .iter()
        .zip(seg)
        .filter(|(_, &s)| s == label)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Average the measurement with the atlas after matching the atlas's gray-
/// and white-matter means to the measurement's.
pub fn atlas_prior_average(vol: &Tensor, atlas: &Tensor, seg: &Tensor) -> Result<(Tensor, AtlasFit)> {
    if !vol.same_shape(atlas) || !vol.same_shape(seg) {
        return Err(Error::Shape(format!(
            "volume {:?}, atlas {:?} and segmentation {:?} must share dims",
            vol.dims(),
            atlas.dims(),
            seg.dims()
        )));
    }
    let s = seg.values();
    let missing = |what| Error::InvalidInput(format!("segmentation has no {what} voxels"));
    let vol_gm = label_mean(vol.values(), s, GRAY_LABEL).ok_or_else(|| missing("gray"))?;
    let vol_wm = label_mean(vol.values(), s, WHITE_LABEL).ok_or_else(|| missing("white"))?;
    let atl_gm = label_mean(atlas.values(), s, GRAY_LABEL).expect("checked above");
    let atl_wm = label_mean(atlas.values(), s, WHITE_LABEL).expect("checked above");
    let denom = atl_gm - atl_wm;
    if denom == 0.0 || denom.abs() <= 1e-12 * (atl_gm.abs() + atl_wm.abs()) {
        return Err(Error::Degenerate(
            "atlas gray- and white-matter means coincide".into(),
        ));
    }
    let scale = (vol_gm - vol_wm) / denom;
    let offset = vol_gm - scale * atl_gm;
    let values = vol
        .values()
        .iter()
        .zip(atlas.values())
        .map(|(&v, &a)| 0.5 * (v + (scale * a + offset)))
        .collect();
    Ok((vol.with_values(values)?, AtlasFit { scale, offset }))
}
