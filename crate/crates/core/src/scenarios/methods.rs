//! Method names, parameters and their binding to a scenario's auxiliary data.

use serde_json::{json, Value};

use crate::denoise::{
    anisotropic_diffuse, atlas_prior_average, basis_restrict, boxcar_smooth, gaussian_smooth_3d,
    identity, parametric_hrf_fit, truncated_svd, Basis, DiffusionParams,
};
use crate::error::{Error, Result};
use crate::scenarios::hrf::{hrf_basis, HrfParams};
use crate::tensor::Tensor;

pub const VALID_NAMES: &str = "identity, gaussian-<fwhm>mm, atlas-prior, diffusion-<iterations>, \
                               basis-<k>, parametric-fit, boxcar-<odd width>, svd-<rank>";

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Identity,
    Gaussian { fwhm_mm: f64 },
    AtlasPrior,
    Diffusion(DiffusionParams),
    Basis { k: usize },
    ParametricFit,
    Boxcar { width: usize },
    Svd { rank: usize },
}

fn unknown(name: &str) -> Error {
    Error::Config(format!("unknown method `{name}`; valid names: {VALID_NAMES}"))
}

impl MethodSpec {
    pub fn parse(name: &str) -> Result<Self> {
        let num = |s: &str| s.parse::<usize>().map_err(|_| unknown(name));
        Ok(match name {
            "identity" => MethodSpec::Identity,
            "atlas-prior" => MethodSpec::AtlasPrior,
            "parametric-fit" => MethodSpec::ParametricFit,
            _ => {
                let (kind, arg) = name.split_once('-').ok_or_else(|| unknown(name))?;
                match kind {
                    "gaussian" => {
                        let mm = arg.strip_suffix("mm").ok_or_else(|| unknown(name))?;
                        let fwhm_mm: f64 = mm.parse().map_err(|_| unknown(name))?;
                        if !fwhm_mm.is_finite() || fwhm_mm < 0.0 {
                            return Err(unknown(name));
                        }
                        MethodSpec::Gaussian { fwhm_mm }
                    }
                    "diffusion" => MethodSpec::Diffusion(DiffusionParams {
                        iterations: num(arg)?,
                        ..Default::default()
                    }),
                    "basis" => MethodSpec::Basis { k: num(arg)? },
                    "boxcar" => MethodSpec::Boxcar { width: num(arg)? },
                    "svd" => MethodSpec::Svd { rank: num(arg)? },
                    _ => return Err(unknown(name)),
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            MethodSpec::Identity => "identity".into(),
            MethodSpec::Gaussian { fwhm_mm } => format!("gaussian-{fwhm_mm}mm"),
            MethodSpec::AtlasPrior => "atlas-prior".into(),
            MethodSpec::Diffusion(p) => format!("diffusion-{}", p.iterations),
            MethodSpec::Basis { k } => format!("basis-{k}"),
            MethodSpec::ParametricFit => "parametric-fit".into(),
            MethodSpec::Boxcar { width } => format!("boxcar-{width}"),
            MethodSpec::Svd { rank } => format!("svd-{rank}"),
        }
    }

    pub fn params(&self, ctx: &MethodContext) -> Value {
        match self {
            MethodSpec::Identity | MethodSpec::AtlasPrior => json!({}),
            MethodSpec::Gaussian { fwhm_mm } => {
                json!({ "fwhm_mm": fwhm_mm, "voxel_mm": ctx.voxel_mm })
            }
            MethodSpec::Diffusion(p) => serde_json::to_value(p).expect("plain struct"),
            MethodSpec::Basis { k } => json!({ "k": k }),
            MethodSpec::ParametricFit => json!({ "seed_params": HrfParams::FIT_SEED.to_array() }),
            MethodSpec::Boxcar { width } => json!({ "width": width }),
            MethodSpec::Svd { rank } => json!({ "rank": rank }),
        }
    }

    /// Replace diffusion knobs other than the iteration count.
    pub fn with_diffusion_defaults(self, defaults: &DiffusionParams) -> Self {
        match self {
            MethodSpec::Diffusion(p) => MethodSpec::Diffusion(DiffusionParams {
                iterations: p.iterations,
                ..*defaults
            }),
            other => other,
        }
    }
}

/// Scenario-level data some methods need.
#[derive(Debug, Clone, Default)]
pub struct MethodContext {
    pub voxel_mm: f64,
    pub atlas: Option<Tensor>,
    pub segmentation: Option<Tensor>,
}

/// A method with its auxiliary inputs resolved.
#[derive(Debug, Clone)]
pub enum PreparedMethod {
    Identity,
    Gaussian { fwhm_mm: f64, voxel_mm: f64 },
    AtlasPrior { atlas: Tensor, segmentation: Tensor },
    Diffusion(DiffusionParams),
    Basis(Basis),
    ParametricFit,
    Boxcar(usize),
    Svd(usize),
}

/// Output of one method on one measurement.
#[derive(Debug, Clone)]
pub struct Applied {
    pub result: Tensor,
    pub converged: Option<bool>,
}

impl PreparedMethod {
    pub fn prepare(spec: &MethodSpec, ctx: &MethodContext, truth: &Tensor) -> Result<Self> {
        let need = |what: &str, ndim: usize| -> Result<()> {
            if truth.ndim() != ndim {
                return Err(Error::Config(format!(
                    "method `{}` needs {what} data ({ndim}-D), this scenario has dims {:?}",
                    spec.name(),
                    truth.dims()
                )));
            }
            Ok(())
        };
        Ok(match spec {
            MethodSpec::Identity => PreparedMethod::Identity,
            MethodSpec::Gaussian { fwhm_mm } => {
                need("volumetric", 3)?;
                PreparedMethod::Gaussian {
                    fwhm_mm: *fwhm_mm,
                    voxel_mm: ctx.voxel_mm,
                }
            }
            MethodSpec::AtlasPrior => {
                need("volumetric", 3)?;
                match (&ctx.atlas, &ctx.segmentation) {
                    (Some(a), Some(s)) => PreparedMethod::AtlasPrior {
                        atlas: a.clone(),
                        segmentation: s.clone(),
                    },
                    _ => {
                        return Err(Error::Config(
                            "atlas-prior needs an atlas and a segmentation".into(),
                        ))
                    }
                }
            }
            MethodSpec::Diffusion(p) => {
                p.validate(truth.ndim())?;
                PreparedMethod::Diffusion(*p)
            }
            MethodSpec::Basis { k } => {
                need("timecourse", 1)?;
                PreparedMethod::Basis(hrf_basis(*k)?)
            }
            MethodSpec::ParametricFit => {
                need("timecourse", 1)?;
                PreparedMethod::ParametricFit
            }
            MethodSpec::Boxcar { width } => {
                if truth.ndim() > 2 {
                    return Err(Error::Config(format!(
                        "boxcar smoothing needs series or matrix data, got dims {:?}",
                        truth.dims()
                    )));
                }
                PreparedMethod::Boxcar(*width)
            }
            MethodSpec::Svd { rank } => {
                need("matrix", 2)?;
                PreparedMethod::Svd(*rank)
            }
        })
    }

    pub fn apply(&self, x: &Tensor) -> Result<Applied> {
        let plain = |result| Applied {
            result,
            converged: None,
        };
        Ok(match self {
            PreparedMethod::Identity => plain(identity(x)),
            PreparedMethod::Gaussian { fwhm_mm, voxel_mm } => {
                plain(gaussian_smooth_3d(x, *fwhm_mm, *voxel_mm)?)
            }
            PreparedMethod::AtlasPrior {
                atlas,
                segmentation,
            } => plain(atlas_prior_average(x, atlas, segmentation)?.0),
            PreparedMethod::Diffusion(p) => plain(anisotropic_diffuse(x, p)?),
            PreparedMethod::Basis(b) => plain(basis_restrict(x, b)?),
            PreparedMethod::ParametricFit => {
                let (result, diag) = parametric_hrf_fit(x, &HrfParams::FIT_SEED)?;
                Applied {
                    result,
                    converged: Some(diag.converged),
                }
            }
            PreparedMethod::Boxcar(w) => plain(boxcar_smooth(x, *w)?),
            PreparedMethod::Svd(r) => plain(truncated_svd(x, *r)?),
        })
    }
}
