//! `dgauge` command line: `run`, `baseline`, `report`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
//! Results go to stdout, diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::denoise::DiffusionParams;
use crate::error::{Error, Result};
use crate::io::{self, render_csv, render_markdown, SUMMARY_CSV, SUMMARY_SVG};
use crate::metrics::unbiased_baseline_seeded;
use crate::noise::NoiseSpec;
use crate::par::Executor;
use crate::scenarios::{run_scenario_with, MethodSpec, ScenarioName, ScenarioSpec};

pub const SEED_ENV: &str = "DGAUGE_SEED";

#[derive(Debug, Parser)]
#[command(name = "dgauge", version, about = "Bias/variance/error benchmark for denoising methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write report.json, summary.csv and summary.svg.
    Run(RunArgs),
    /// Monte Carlo apparent-bias value of an unbiased Gaussian process.
    Baseline(BaselineArgs),
    /// Regenerate derived outputs from an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: ScenarioName,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub measurements: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    /// Also write per-point mean/SE/truth to diagnostics.csv.
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Debug, clap::Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub measurements: usize,
    #[arg(long, default_value_t = crate::scenarios::DEFAULT_BASELINE_DRAWS)]
    pub draws: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Svg,
    Md,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output to regenerate; csv and svg when omitted.
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}

fn parse_scenario(s: &str) -> std::result::Result<ScenarioName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Keys accepted in a `--config` JSON file.
const CONFIG_KEYS: &[&str] = &[
    "seed",
    "m",
    "sigma",
    "noise_width",
    "methods",
    "phantom_size",
    "out",
    "diffusion",
    "baseline_draws",
    "diagnostics",
];

/// Overrides read from a JSON config file. Every key is optional.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub sigma: Option<f64>,
    pub noise_width: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub phantom_size: Option<usize>,
    pub out: Option<PathBuf>,
    pub diffusion: Option<DiffusionParams>,
    pub baseline_draws: Option<usize>,
    pub diagnostics: Option<bool>,
}

fn typed<T: DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            serde_json::from_value(v.clone())
                .map_err(|e| Error::Config(format!("config key `{key}`: {e}")))
        })
        .transpose()
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown config key `{k}`; valid keys: {}",
                CONFIG_KEYS.join(", ")
            )));
        }
        Ok(Self {
            seed: typed(&map, "seed")?,
            m: typed(&map, "m")?,
            sigma: typed(&map, "sigma")?,
            noise_width: typed(&map, "noise_width")?,
            methods: typed(&map, "methods")?,
            phantom_size: typed(&map, "phantom_size")?,
            out: typed(&map, "out")?,
            diffusion: typed(&map, "diffusion")?,
            baseline_draws: typed(&map, "baseline_draws")?,
            diagnostics: typed(&map, "diagnostics")?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Layer these overrides onto `spec`.
    pub fn apply(&self, spec: &mut ScenarioSpec) -> Result<()> {
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(m) = self.m {
            spec.m = m;
        }
        if let Some(methods) = &self.methods {
            spec.methods = methods
                .iter()
                .map(|n| MethodSpec::parse(n))
                .collect::<Result<_>>()?;
        }
        if let Some(d) = &self.diffusion {
            spec.apply_diffusion_defaults(d);
        }
        if let Some(sigma) = self.sigma {
            spec.noise = match spec.noise {
                NoiseSpec::IidGaussian { .. } => NoiseSpec::IidGaussian { sigma },
                NoiseSpec::CorrelatedGaussian { boxcar_width, .. } => {
                    NoiseSpec::CorrelatedGaussian { sigma, boxcar_width }
                }
            };
        }
        if let Some(width) = self.noise_width {
            spec.noise = match spec.noise {
                NoiseSpec::CorrelatedGaussian { sigma, .. } => NoiseSpec::CorrelatedGaussian {
                    sigma,
                    boxcar_width: width,
                },
                NoiseSpec::IidGaussian { .. } => {
                    return Err(Error::Config(format!(
                        "config key `noise_width`: scenario `{}` uses independent noise",
                        spec.name
                    )))
                }
            };
        }
        if let Some(n) = self.phantom_size {
            spec.phantom_size = n;
        }
        if let Some(draws) = self.baseline_draws {
            spec.baseline_draws = draws;
        }
        if let Some(d) = self.diagnostics {
            spec.diagnostics = d;
        }
        if let Some(out) = &self.out {
            spec.out_dir = Some(out.clone());
        }
        Ok(())
    }
}

/// Build the scenario spec for `run`: defaults, then env seed, then config, then flags.
pub fn resolve_run_spec(args: &RunArgs) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::defaults(args.scenario);
    if let Some(seed) = env_seed()? {
        spec.seed = seed;
    }
    if let Some(path) = &args.config {
        CliConfig::load(path)?.apply(&mut spec)?;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(m) = args.measurements {
        spec.m = m;
    }
    if let Some(out) = &args.out {
        spec.out_dir = Some(out.clone());
    }
    if args.diagnostics {
        spec.diagnostics = true;
    }
    if spec.out_dir.is_none() {
        return Err(Error::Config("an output directory is required (--out DIR)".into()));
    }
    if spec.m < 2 {
        return Err(Error::Config(format!(
            "need at least 2 measurements, got {}",
            spec.m
        )));
    }
    Ok(spec)
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let spec = resolve_run_spec(args)?;
    let exec = Executor::with_workers(args.parallel);
    let run = run_scenario_with(&exec, &spec)?;
    for m in &run.report.methods {
        writeln!(
            err,
            "{}: bias {:.4} variance {:.4} error {:.4}",
            m.name, m.bias, m.variance, m.error
        )
        .ok();
    }
    writeln!(
        err,
        "wrote {} ({:.2} s)",
        spec.out_dir.as_ref().expect("checked").display(),
        run.elapsed.as_secs_f64()
    )
    .ok();
    write!(out, "{}", render_markdown(&run.report)).ok();
    Ok(())
}

fn cmd_baseline(args: &BaselineArgs, out: &mut dyn Write) -> Result<()> {
    if args.measurements < 2 {
        return Err(Error::Config(format!(
            "--measurements must be at least 2 (standard error is undefined for {})",
            args.measurements
        )));
    }
    if args.draws < 10_000 {
        return Err(Error::Config(format!(
            "--draws must be at least 10000, got {}",
            args.draws
        )));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(crate::scenarios::BASELINE_SEED),
    };
    let exec = Executor::with_workers(args.parallel);
    let v = unbiased_baseline_seeded(&exec, args.measurements, args.draws, seed)?;
    writeln!(out, "{v:.4}").ok();
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let report = match io::read_report(&args.input) {
        Err(Error::Io { path, source }) if source.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Config(format!("no report found at {}", path.display())))
        }
        other => other?,
    };
    let dir = if args.input.is_dir() {
        args.input.clone()
    } else {
        args.input.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let write_csv = |out: &mut dyn Write| -> Result<()> {
        let csv = render_csv(&report);
        let path = dir.join(SUMMARY_CSV);
        std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
        write!(out, "{csv}").ok();
        Ok(())
    };
    match args.format {
        Some(ReportFormat::Csv) => write_csv(out)?,
        Some(ReportFormat::Svg) => io::render_summary_svg(&report, dir.join(SUMMARY_SVG))?,
        Some(ReportFormat::Md) => {
            write!(out, "{}", render_markdown(&report)).ok();
        }
        None => {
            write_csv(out)?;
            io::render_summary_svg(&report, dir.join(SUMMARY_SVG))?;
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 1,
    }
}

/// Run the CLI on already-parsed arguments; returns the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Baseline(a) => cmd_baseline(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_and_mistyped_keys() {
        let e = CliConfig::parse(r#"{"sead": 3}"#).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("`sead`")));
        let e = CliConfig::parse(r#"{"m": "ten"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("`m`")), "{e}");
        let e = CliConfig::parse(r#"{"diffusion": {"tau": 0.1, "bogus": 1}}"#).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("`diffusion`")), "{e}");
        assert!(CliConfig::parse("[1, 2]").is_err());
    }

    #[test]
    fn config_layers_onto_defaults() {
        let cfg = CliConfig::parse(
            r#"{"seed": 9, "m": 12, "sigma": 0.3, "noise_width": 3,
                "methods": ["identity", "basis-4"], "diagnostics": true}"#,
        )
        .unwrap();
        let mut spec = ScenarioSpec::defaults(ScenarioName::Timecourse);
        cfg.apply(&mut spec).unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.m, 12);
        assert_eq!(
            spec.noise,
            NoiseSpec::CorrelatedGaussian { sigma: 0.3, boxcar_width: 3 }
        );
        assert_eq!(spec.methods.len(), 2);
        assert!(spec.diagnostics);

        let mut tuning = ScenarioSpec::defaults(ScenarioName::Tuning);
        assert!(cfg.apply(&mut tuning).is_err());
    }

    #[test]
    fn diffusion_knobs_apply_to_diffusion_methods() {
        let cfg = CliConfig::parse(r#"{"diffusion": {"tau": 0.1, "contrast_percentile": 30}}"#)
            .unwrap();
        let mut spec = ScenarioSpec::defaults(ScenarioName::Anatomical);
        cfg.apply(&mut spec).unwrap();
        let d = spec
            .methods
            .iter()
            .find_map(|m| match m {
                MethodSpec::Diffusion(p) => Some(*p),
                _ => None,
            })
            .unwrap();
        assert_eq!(d.iterations, 20);
        assert_eq!(d.tau, 0.1);
        assert_eq!(d.contrast_percentile, 30.0);
    }
}
