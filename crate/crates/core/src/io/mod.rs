//! File formats: DGV1 volumes, report JSON, summary CSV/markdown, SVG charts.

mod report;
mod svg;
mod volume;

pub use report::{
    read_report, render_csv, render_markdown, write_diagnostics, write_outputs, write_report,
    DIAGNOSTICS_FILE, REPORT_FILE, SUMMARY_CSV, SUMMARY_SVG,
};
pub use svg::{render_summary_svg, summary_svg};
pub use volume::{decode_volume, encode_volume, read_volume, write_volume, MAGIC};

use std::path::Path;

use crate::error::{Error, Result};

/// Write `bytes` to `path`, creating parent directories.
pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
