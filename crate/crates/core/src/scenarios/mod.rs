//! Ground-truth generators and the end-to-end scenario runner.

mod figure1;
mod hrf;
mod methods;
mod phantom;
mod tuning;

pub use figure1::{
    draw_quadrant, figure1_demo, figure1_replicated, quadrant_name, quadrants, QuadrantAverage,
    QuadrantRecord,
};
pub use hrf::{double_gamma, hrf_basis, hrf_from_params, hrf_library, HrfParams};
pub use methods::{Applied, MethodContext, MethodSpec, PreparedMethod, VALID_NAMES};
pub use phantom::{phantom_bundle, VolumeBundle};
pub use tuning::tuning_truth;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::denoise::DiffusionParams;
use crate::error::{invalid_param, Error, Result};
use crate::metrics::{summarize, unbiased_baseline_seeded, MetricSummary, PointStats};
use crate::noise::{generate_measurements_with, NoiseSpec};
use crate::par::Executor;
use crate::rng::make_rng;
use crate::tensor::Tensor;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BASELINE_DRAWS: usize = 1_000_000;
/// Seed of the baseline Monte Carlo; fixed so the baseline depends only on m.
pub const BASELINE_SEED: u64 = 0x0BA5_E11E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Figure1,
    Anatomical,
    Timecourse,
    Tuning,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::Figure1,
        ScenarioName::Anatomical,
        ScenarioName::Timecourse,
        ScenarioName::Tuning,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Figure1 => "figure1",
            ScenarioName::Anatomical => "anatomical",
            ScenarioName::Timecourse => "timecourse",
            ScenarioName::Tuning => "tuning",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scenario `{s}`; valid names: figure1, anatomical, timecourse, tuning"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub seed: u64,
    pub m: usize,
    pub noise: NoiseSpec,
    pub methods: Vec<MethodSpec>,
    pub phantom_size: usize,
    pub baseline_draws: usize,
    /// Keep per-point mean, SE and truth for every method.
    pub diagnostics: bool,
    pub out_dir: Option<PathBuf>,
}

fn parse_all(names: &[&str]) -> Vec<MethodSpec> {
    names
        .iter()
        .map(|n| MethodSpec::parse(n).expect("built-in method name"))
        .collect()
}

impl ScenarioSpec {
    pub fn defaults(name: ScenarioName) -> Self {
        let (m, noise, methods) = match name {
            ScenarioName::Figure1 => (
                figure1::DRAWS,
                NoiseSpec::IidGaussian { sigma: 1.0 },
                Vec::new(),
            ),
            ScenarioName::Anatomical => (
                10,
                NoiseSpec::IidGaussian { sigma: 300.0 },
                parse_all(&["identity", "gaussian-3mm", "atlas-prior", "diffusion-20"]),
            ),
            ScenarioName::Timecourse => (
                10,
                NoiseSpec::CorrelatedGaussian {
                    sigma: 0.2,
                    boxcar_width: 5,
                },
                parse_all(&["identity", "basis-3", "parametric-fit"]),
            ),
            ScenarioName::Tuning => (
                30,
                NoiseSpec::IidGaussian { sigma: 0.6 },
                parse_all(&[
                    "identity", "boxcar-3", "svd-2", "svd-3", "svd-4", "svd-6", "svd-8",
                ]),
            ),
        };
        Self {
            name,
            seed: 0,
            m,
            noise,
            methods,
            phantom_size: 64,
            baseline_draws: DEFAULT_BASELINE_DRAWS,
            diagnostics: false,
            out_dir: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn apply_diffusion_defaults(&mut self, defaults: &DiffusionParams) {
        self.methods = std::mem::take(&mut self.methods)
            .into_iter()
            .map(|m| m.with_diffusion_defaults(defaults))
            .collect();
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid_param!("need at least 2 measurements, got {}", self.m));
        }
        self.noise.validate()?;
        if self.name != ScenarioName::Figure1 && self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub name: String,
    pub params: serde_json::Value,
    pub bias: f64,
    pub variance: f64,
    pub variance_std: f64,
    pub error: f64,
    pub skipped_points: usize,
    pub degenerate_results: usize,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonconverged_fits: Option<usize>,
}

impl MethodReport {
    fn new(name: String, params: serde_json::Value, s: &MetricSummary) -> Self {
        Self {
            name,
            params,
            bias: s.bias,
            variance: s.variance,
            variance_std: s.variance_std,
            error: s.error,
            skipped_points: s.skipped_points,
            degenerate_results: s.degenerate_results,
            points: s.points,
            nonconverged_fits: None,
        }
    }
}

/// Machine-readable outcome of one scenario run; serializes as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub seed: u64,
    pub m: usize,
    pub noise: NoiseSpec,
    pub baseline: f64,
    pub baseline_draws: usize,
    pub methods: Vec<MethodReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure1: Option<Vec<QuadrantRecord>>,
}

impl ScenarioReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDiagnostics {
    pub name: String,
    pub points: PointStats,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub diagnostics: Vec<MethodDiagnostics>,
    pub elapsed: Duration,
}

/// Apparent-bias baseline for `m` results, memoized per `(m, draws)`.
pub fn baseline_for(exec: &Executor, m: usize, draws: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("baseline cache").get(&(m, draws)) {
        return Ok(v);
    }
    let v = unbiased_baseline_seeded(exec, m, draws, BASELINE_SEED)?;
    cache.lock().expect("baseline cache").insert((m, draws), v);
    Ok(v)
}

struct Prepared {
    truth: Tensor,
    ctx: MethodContext,
}

fn build_truth(spec: &ScenarioSpec) -> Result<Prepared> {
    Ok(match spec.name {
        ScenarioName::Anatomical => {
            let b = phantom_bundle(spec.phantom_size)?;
            Prepared {
                truth: b.masked_truth(),
                ctx: MethodContext {
                    voxel_mm: b.voxel_mm,
                    atlas: Some(b.atlas),
                    segmentation: Some(b.segmentation),
                },
            }
        }
        ScenarioName::Timecourse => Prepared {
            truth: hrf_from_params(&HrfParams::TRUTH)?,
            ctx: MethodContext::default(),
        },
        ScenarioName::Tuning => Prepared {
            truth: tuning_truth(&mut make_rng(spec.seed)),
            ctx: MethodContext::default(),
        },
        ScenarioName::Figure1 => unreachable!("figure1 has no tensor truth"),
    })
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun> {
    run_scenario_with(&Executor::default(), spec)
}

pub fn run_scenario_with(exec: &Executor, spec: &ScenarioSpec) -> Result<ScenarioRun> {
    spec.validate()?;
    let start = Instant::now();
    let baseline = baseline_for(exec, spec.m, spec.baseline_draws)?;
    let (mut report, diagnostics) = if spec.name == ScenarioName::Figure1 {
        run_figure1(spec, baseline)?
    } else {
        run_tensor_scenario(exec, spec, baseline)?
    };
    if spec.diagnostics {
        report.diagnostics = Some(crate::io::DIAGNOSTICS_FILE.to_string());
    }
    let run = ScenarioRun {
        report,
        diagnostics,
        elapsed: start.elapsed(),
    };
    if let Some(dir) = &spec.out_dir {
        crate::io::write_outputs(dir, &run)?;
    }
    Ok(run)
}

fn run_tensor_scenario(
    exec: &Executor,
    spec: &ScenarioSpec,
    baseline: f64,
) -> Result<(ScenarioReport, Vec<MethodDiagnostics>)> {
    let Prepared { truth, ctx } = build_truth(spec)?;
    let methods: Vec<PreparedMethod> = spec
        .methods
        .iter()
        .map(|m| PreparedMethod::prepare(m, &ctx, &truth))
        .collect::<Result<_>>()?;
    let data = generate_measurements_with(exec, &truth, spec.noise, spec.m, spec.seed)?;
    let m = spec.m;
    let applied = exec.try_map(methods.len() * m, |task| {
        methods[task / m].apply(&data.measurements[task % m])
    })?;

    let mut reports = Vec::with_capacity(methods.len());
    let mut diags = Vec::new();
    for (k, method) in spec.methods.iter().enumerate() {
        let outs = &applied[k * m..(k + 1) * m];
        let results: Vec<Tensor> = outs.iter().map(|a| a.result.clone()).collect();
        let (summary, stats) = summarize(&results, &data.truth)?;
        let mut r = MethodReport::new(method.name(), method.params(&ctx), &summary);
        if outs.iter().any(|a| a.converged.is_some()) {
            r.nonconverged_fits = Some(outs.iter().filter(|a| a.converged == Some(false)).count());
        }
        reports.push(r);
        if spec.diagnostics {
            diags.push(MethodDiagnostics {
                name: method.name(),
                points: stats,
            });
        }
    }
    Ok((
        ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario: spec.name,
            seed: spec.seed,
            m: spec.m,
            noise: spec.noise,
            baseline,
            baseline_draws: spec.baseline_draws,
            methods: reports,
            diagnostics: None,
            figure1: None,
        },
        diags,
    ))
}

/// Each quadrant is reported as a method over a single data point; the
/// correlation error is undefined there and reported as 0, flagged.
fn run_figure1(spec: &ScenarioSpec, baseline: f64) -> Result<(ScenarioReport, Vec<MethodDiagnostics>)> {
    let records: Vec<QuadrantRecord> = quadrants()
        .iter()
        .enumerate()
        .map(|(q, &(mean, var))| {
            draw_quadrant(&mut crate::rng::substream(spec.seed, q as u64), mean, var, spec.m)
        })
        .collect::<Result<_>>()?;
    let mf = spec.m as f64;
    let methods = records
        .iter()
        .map(|r| {
            let sample_mean = r.estimated_bias + figure1::TRUTH;
            let sd = (r.estimated_variance * mf / (mf - 1.0)).sqrt();
            let se = sd / mf.sqrt();
            MethodReport {
                name: quadrant_name(r.mean, r.variance),
                params: serde_json::json!({ "mean": r.mean, "variance": r.variance, "truth": figure1::TRUTH }),
                bias: if se > 0.0 { (sample_mean - figure1::TRUTH).abs() / se } else { 0.0 },
                variance: se,
                variance_std: sd,
                error: 0.0,
                skipped_points: usize::from(se == 0.0),
                degenerate_results: spec.m,
                points: 1,
                nonconverged_fits: None,
            }
        })
        .collect();
    Ok((
        ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario: ScenarioName::Figure1,
            seed: spec.seed,
            m: spec.m,
            noise: spec.noise,
            baseline,
            baseline_draws: spec.baseline_draws,
            methods,
            diagnostics: None,
            figure1: Some(records),
        },
        Vec::new(),
    ))
}
