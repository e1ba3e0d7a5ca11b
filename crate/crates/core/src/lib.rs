//! Bias, variance and ground-truth error of denoising methods under repeated
//! noisy measurement.
//!
//! A scenario fixes a ground truth, draws `m` noisy measurements of it,
//! applies each denoising method to every measurement independently and
//! summarizes the results per method:
//!
//! * **bias**: median over points of `|mean - truth| / SE`, in standard-error units
//! * **variance**: median per-point standard error, in data units
//! * **error**: mean Pearson correlation of each result with the truth
//!
//! Bias is compared against the value an unbiased Gaussian process produces
//! ([`metrics::unbiased_baseline`]), about 0.70 for ten measurements.

pub mod cli;
pub mod denoise;
pub mod error;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod optim;
pub mod par;
pub mod rng;
pub mod scenarios;
pub mod tensor;

pub use error::{Error, Result};
pub use metrics::MetricSummary;
pub use noise::{Dataset, NoiseSpec};
pub use par::Executor;
pub use rng::RngState;
pub use scenarios::{run_scenario, run_scenario_with, ScenarioName, ScenarioReport, ScenarioSpec};
pub use tensor::Tensor;
