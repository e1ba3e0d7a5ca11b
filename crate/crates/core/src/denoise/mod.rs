//! Denoising methods. Each maps one measurement to one result of the same
//! shape without touching its input; masks pass through unchanged.

mod atlas;
mod basis;
mod diffusion;
mod hrf_fit;
mod smooth;
mod svd;

pub use atlas::{atlas_prior_average, AtlasFit, GRAY_LABEL, WHITE_LABEL};
pub use basis::{basis_restrict, Basis};
pub use diffusion::{anisotropic_diffuse, DiffusionParams};
pub use hrf_fit::{parametric_hrf_fit, FitDiagnostics};
pub use smooth::{
    boxcar_smooth, fwhm_to_sigma, gaussian_kernel, gaussian_smooth, gaussian_smooth_3d,
};
pub use svd::{svd_factors, truncated_svd, SvdFactors};

use crate::tensor::Tensor;

/// The measurement as-is.
pub fn identity(x: &Tensor) -> Tensor {
    x.clone()
}
