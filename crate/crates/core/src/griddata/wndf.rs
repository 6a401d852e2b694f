//! The `WNDF` grid file.
//!
//! Layout, all integers 32-bit little-endian unsigned:
//!
//! ```text
//! 0..4    b"WNDF"
//! 4..8    version (1)
//! 8..32   T, H, W, step_hours, origin_index, start_month
//! 32..    T·H·W binary32 little-endian values, [t][row][col] row-major
//! ```
//!
//! There is no padding and no footer.

use std::path::Path;

use ndarray::Array3;

use super::GridSeries;
use crate::{Error, Result};

pub const WNDF_MAGIC: &[u8; 4] = b"WNDF";
pub const WNDF_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

pub fn encode_grid(series: &GridSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * series.values.len());
    out.extend_from_slice(WNDF_MAGIC);
    for v in [
        WNDF_VERSION,
        series.t_len() as u32,
        series.height() as u32,
        series.width() as u32,
        series.step_hours,
        series.origin_index,
        series.start_month,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in series.values.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn header_u32(bytes: &[u8], k: usize) -> u32 {
    let at = 4 + 4 * k;
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridSeries> {
    if bytes.len() < 4 || &bytes[..4] != WNDF_MAGIC {
        return Err(Error::Format("missing WNDF magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = header_u32(bytes, 0);
    if version != WNDF_VERSION {
        return Err(Error::Format(format!("unsupported WNDF version {version}")));
    }
    let dims: Vec<usize> = (1..=3).map(|k| header_u32(bytes, k) as usize).collect();
    let (t, h, w) = (dims[0], dims[1], dims[2]);
    let step_hours = header_u32(bytes, 4);
    let origin_index = header_u32(bytes, 5);
    let start_month = header_u32(bytes, 6);
    if step_hours == 0 {
        return Err(Error::Format("step_hours is zero".into()));
    }
    if !(1..=12).contains(&start_month) {
        return Err(Error::Format(format!("start_month {start_month} outside 1..=12")));
    }
    let count = t
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let expected = HEADER_LEN + 4 * count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect();
    let values = Array3::from_shape_vec((t, h, w), values).expect("length checked above");
    GridSeries::new(values, step_hours, origin_index, start_month)
}

pub fn read_grid_file(path: impl AsRef<Path>) -> Result<GridSeries> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes)
}

pub fn write_grid_file(path: impl AsRef<Path>, series: &GridSeries) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_grid(series)).map_err(|e| Error::io(path, e))
}
