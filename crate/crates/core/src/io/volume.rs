//! DGV1: a minimal volume container.
//!
//! ```text
//! DGV1\n
//! dims: <d0> <d1> <d2>\n      axis order of the tensor, last axis fastest
//! voxel_mm: <v>\n
//! dtype: f32le\n
//! \n
//! <4·d0·d1·d2 bytes of little-endian f32, row-major>
//! ```

use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"DGV1";

pub fn encode_volume(vol: &Tensor, voxel_mm: f64) -> Result<Vec<u8>> {
    vol.expect_ndim(3, "DGV1 writer")?;
    if !voxel_mm.is_finite() || voxel_mm <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "voxel size must be > 0, got {voxel_mm}"
        )));
    }
    let d = vol.dims();
    let header = format!(
        "DGV1\ndims: {} {} {}\nvoxel_mm: {voxel_mm}\ndtype: f32le\n\n",
        d[0], d[1], d[2]
    );
    let mut out = Vec::with_capacity(header.len() + 4 * vol.len());
    out.extend_from_slice(header.as_bytes());
    for &v in vol.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn write_volume(path: impl AsRef<Path>, vol: &Tensor, voxel_mm: f64) -> Result<()> {
    write_bytes(path.as_ref(), &encode_volume(vol, voxel_mm)?)
}

fn take_line<'a>(path: &Path, bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, format!("header ends before the {what} line")))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end])
        .map_err(|_| Error::format(path, format!("{what} line is not valid UTF-8")))
}

fn field<'a>(path: &Path, line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| Error::format(path, format!("expected `{key}: ...`, found {line:?}")))
}

/// Parse a DGV1 byte stream. `path` only labels diagnostics.
pub fn decode_volume(path: &Path, bytes: &[u8]) -> Result<(Tensor, f64)> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC || bytes[4] != b'\n' {
        let head = &bytes[..bytes.len().min(5)];
        return Err(Error::format(
            path,
            format!(
                "bad magic {:?}, expected \"DGV1\\n\"",
                String::from_utf8_lossy(head)
            ),
        ));
    }
    let mut pos = 5;
    let dims_line = take_line(path, bytes, &mut pos, "dims")?;
    let dims: Vec<usize> = field(path, dims_line, "dims")?
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, format!("dims: cannot parse {dims_line:?}")))?;
    if dims.len() != 3 || dims.contains(&0) {
        return Err(Error::format(
            path,
            format!("dims: need three positive sizes, got {dims:?}"),
        ));
    }
    let voxel_line = take_line(path, bytes, &mut pos, "voxel_mm")?;
    let voxel_mm: f64 = field(path, voxel_line, "voxel_mm")?
        .parse()
        .map_err(|_| Error::format(path, format!("voxel_mm: cannot parse {voxel_line:?}")))?;
    if !voxel_mm.is_finite() || voxel_mm <= 0.0 {
        return Err(Error::format(path, format!("voxel_mm: must be > 0, got {voxel_mm}")));
    }
    let dtype_line = take_line(path, bytes, &mut pos, "dtype")?;
    let dtype = field(path, dtype_line, "dtype")?;
    if dtype != "f32le" {
        return Err(Error::format(path, format!("dtype: unsupported {dtype:?}")));
    }
    let blank = take_line(path, bytes, &mut pos, "blank terminator")?;
    if !blank.is_empty() {
        return Err(Error::format(
            path,
            format!("header must end with a blank line, found {blank:?}"),
        ));
    }
    let count: usize = dims.iter().product();
    let expected = 4 * count;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "payload: expected {expected} bytes for dims {dims:?}, found {}",
                payload.len()
            ),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::format(
            path,
            format!("payload: non-finite value at voxel {i}"),
        ));
    }
    Ok((Tensor::new(dims, values)?, voxel_mm))
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<(Tensor, f64)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(path, &bytes)
}
