//! Three-panel horizontal bar chart (bias, variance, error) as plain SVG 1.1.

use std::fmt::Write as _;
use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::scenarios::ScenarioReport;

const PANEL_W: f64 = 220.0;
const GAP: f64 = 30.0;
const LABEL_W: f64 = 110.0;
const ROW_H: f64 = 22.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 30.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Panel<'a> {
    title: &'a str,
    values: Vec<f64>,
    lo: f64,
    hi: f64,
    rule: Option<f64>,
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|s| s * mag)
        .find(|&c| c >= v)
        .unwrap_or(10.0 * mag)
}

pub fn summary_svg(report: &ScenarioReport) -> Result<String> {
    if report.methods.is_empty() {
        return Err(Error::InvalidInput("report has no methods to plot".into()));
    }
    let n = report.methods.len();
    let bias: Vec<f64> = report.methods.iter().map(|m| m.bias).collect();
    let var: Vec<f64> = report.methods.iter().map(|m| m.variance).collect();
    let err: Vec<f64> = report.methods.iter().map(|m| m.error).collect();
    let bias_hi = nice_max(bias.iter().copied().fold(report.baseline, f64::max));
    let var_hi = nice_max(var.iter().copied().fold(0.0, f64::max));
    let err_lo = if err.iter().any(|&e| e < 0.0) { -1.0 } else { 0.0 };
    let panels = [
        Panel { title: "bias (SE units)", values: bias, lo: 0.0, hi: bias_hi, rule: Some(report.baseline) },
        Panel { title: "variance (median SE)", values: var, lo: 0.0, hi: var_hi, rule: None },
        Panel { title: "error (mean r)", values: err, lo: err_lo, hi: 1.0, rule: None },
    ];

    let width = LABEL_W + 3.0 * PANEL_W + 3.0 * GAP;
    let height = TOP + n as f64 * ROW_H + BOTTOM;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="8" y="16" font-size="13">{} (seed {}, m = {})</text>"#,
        escape(report.scenario.as_str()),
        report.seed,
        report.m
    )
    .unwrap();
    for (k, m) in report.methods.iter().enumerate() {
        let y = TOP + (k as f64 + 0.5) * ROW_H + 4.0;
        writeln!(s, r#"<text class="label" x="8" y="{y:.1}">{}</text>"#, escape(&m.name)).unwrap();
    }
    for (p, panel) in panels.iter().enumerate() {
        let x0 = LABEL_W + p as f64 * (PANEL_W + GAP);
        let scale = |v: f64| x0 + (v - panel.lo) / (panel.hi - panel.lo) * PANEL_W;
        writeln!(s, r#"<g class="panel" id="panel-{p}">"#).unwrap();
        writeln!(
            s,
            r#"<text x="{x0:.1}" y="{:.1}">{}</text>"#,
            TOP - 14.0,
            escape(panel.title)
        )
        .unwrap();
        writeln!(
            s,
            r##"<rect x="{x0:.1}" y="{TOP:.1}" width="{PANEL_W:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
            n as f64 * ROW_H
        )
        .unwrap();
        let zero = scale(0.0_f64.clamp(panel.lo, panel.hi));
        for (k, &v) in panel.values.iter().enumerate() {
            let end = scale(v.clamp(panel.lo, panel.hi));
            let (x, w) = if end >= zero { (zero, end - zero) } else { (end, zero - end) };
            let y = TOP + k as f64 * ROW_H + 4.0;
            writeln!(
                s,
                r##"<rect class="bar" x="{x:.2}" y="{y:.1}" width="{w:.2}" height="{:.1}" fill="#4a7fb0"><title>{}: {v:.4}</title></rect>"##,
                ROW_H - 8.0,
                escape(&report.methods[k].name)
            )
            .unwrap();
        }
        if let Some(rule) = panel.rule {
            let x = scale(rule.clamp(panel.lo, panel.hi));
            writeln!(
                s,
                r##"<line class="baseline" x1="{x:.2}" y1="{TOP:.1}" x2="{x:.2}" y2="{:.1}" stroke="#888" stroke-width="2"/>"##,
                TOP + n as f64 * ROW_H
            )
            .unwrap();
        }
        let axis_y = TOP + n as f64 * ROW_H + 14.0;
        writeln!(s, r#"<text x="{x0:.1}" y="{axis_y:.1}">{}</text>"#, panel.lo).unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="{axis_y:.1}" text-anchor="end">{}</text>"#,
            x0 + PANEL_W,
            panel.hi
        )
        .unwrap();
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_summary_svg(report: &ScenarioReport, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), summary_svg(report)?.as_bytes())
}
