use std::fmt::Write as _;
use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::scenarios::{MethodDiagnostics, ScenarioReport, ScenarioRun};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_SVG: &str = "summary.svg";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

fn check_finite(report: &ScenarioReport) -> Result<()> {
    let bad = report.methods.iter().find(|m| {
        ![m.bias, m.variance, m.variance_std, m.error]
            .iter()
            .all(|v| v.is_finite())
    });
    if let Some(m) = bad {
        return Err(Error::InvalidInput(format!(
            "method `{}` has non-finite metrics",
            m.name
        )));
    }
    if !(report.baseline > 0.0 && report.baseline.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "baseline must be positive, got {}",
            report.baseline
        )));
    }
    Ok(())
}

pub fn render_csv(report: &ScenarioReport) -> String {
    let mut s = String::from("method,bias,variance,error\n");
    for m in &report.methods {
        writeln!(s, "{},{},{},{}", m.name, m.bias, m.variance, m.error).unwrap();
    }
    s
}

pub fn render_markdown(report: &ScenarioReport) -> String {
    let mut s = format!(
        "scenario `{}`, seed {}, m = {}, baseline {:.4}\n\n",
        report.scenario, report.seed, report.m, report.baseline
    );
    s.push_str("| method | bias | variance | error | skipped |\n");
    s.push_str("|---|---:|---:|---:|---:|\n");
    for m in &report.methods {
        writeln!(
            s,
            "| {} | {:.4} | {:.4} | {:.4} | {} |",
            m.name, m.bias, m.variance, m.error, m.skipped_points
        )
        .unwrap();
    }
    s
}

/// `report.json` and `summary.csv` under `dir`.
pub fn write_report(dir: impl AsRef<Path>, report: &ScenarioReport) -> Result<()> {
    let dir = dir.as_ref();
    check_finite(report)?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write_bytes(&dir.join(REPORT_FILE), json.as_bytes())?;
    write_bytes(&dir.join(SUMMARY_CSV), render_csv(report).as_bytes())
}

/// Accepts either the report file itself or the directory holding it.
pub fn read_report(path: impl AsRef<Path>) -> Result<ScenarioReport> {
    let path = path.as_ref();
    let file = if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let report: ScenarioReport =
        serde_json::from_str(&text).map_err(|e| Error::format(&file, e.to_string()))?;
    check_finite(&report).map_err(|e| Error::format(&file, e.to_string()))?;
    Ok(report)
}

pub fn write_diagnostics(path: impl AsRef<Path>, diags: &[MethodDiagnostics]) -> Result<()> {
    let mut s = String::from("method,index,mean,se,truth\n");
    for d in diags {
        let p = &d.points;
        for k in 0..p.index.len() {
            writeln!(s, "{},{},{},{},{}", d.name, p.index[k], p.mean[k], p.se[k], p.truth[k])
                .unwrap();
        }
    }
    write_bytes(path.as_ref(), s.as_bytes())
}

/// Everything a run produces: JSON, CSV, SVG, and diagnostics when kept.
pub fn write_outputs(dir: impl AsRef<Path>, run: &ScenarioRun) -> Result<()> {
    let dir = dir.as_ref();
    write_report(dir, &run.report)?;
    super::render_summary_svg(&run.report, dir.join(SUMMARY_SVG))?;
    if run.report.diagnostics.is_some() {
        write_diagnostics(dir.join(DIAGNOSTICS_FILE), &run.diagnostics)?;
    }
    Ok(())
}
