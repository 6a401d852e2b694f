//! The `WNDM` model checkpoint.
//!
//! ```text
//! b"WNDM", version u32 = 1,
//! H, W, m, n, F, hidden, n_lags, block_hours   (u32 each)
//! beta                                          (f64)
//! per tensor, in Parameters::tensors order:
//!     rank u32, dims u32 × rank, payload binary32 × Π dims
//! ```
//!
//! All numbers little-endian. Parameters are stored at single precision.

use std::path::Path;

use super::model::{Architecture, CompositeModel, Parameters};
use crate::griddata::ScaleParams;
use crate::{Error, Result};

pub const WNDM_MAGIC: &[u8; 4] = b"WNDM";
pub const WNDM_VERSION: u32 = 1;

pub fn encode_checkpoint(model: &CompositeModel) -> Vec<u8> {
    let a = &model.arch;
    let mut out = WNDM_MAGIC.to_vec();
    for v in [
        WNDM_VERSION,
        a.height as u32,
        a.width as u32,
        a.kernel_rows as u32,
        a.kernel_cols as u32,
        a.filters as u32,
        a.hidden() as u32,
        a.n_lags as u32,
        a.block_hours,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&model.scale.beta.to_le_bytes());
    for t in model.params.tensors() {
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for d in &t.shape {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in t.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Truncated {
                expected: self.at + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<CompositeModel> {
    let mut rd = Reader { bytes, at: 0 };
    if rd.take(4).ok() != Some(WNDM_MAGIC.as_slice()) {
        return Err(Error::Format("missing WNDM magic".into()));
    }
    let version = rd.u32()?;
    if version != WNDM_VERSION {
        return Err(Error::Format(format!("unsupported WNDM version {version}")));
    }
    let mut counts = [0usize; 8];
    for c in counts.iter_mut() {
        *c = rd.u32()? as usize;
    }
    let [height, width, kernel_rows, kernel_cols, filters, hidden, n_lags, block_hours] = counts;
    let arch = Architecture {
        height,
        width,
        kernel_rows,
        kernel_cols,
        filters,
        n_lags,
        block_hours: block_hours as u32,
    };
    arch.validate()?;
    if arch.hidden() != hidden {
        return Err(Error::Format(format!(
            "hidden size {hidden} inconsistent with architecture ({})",
            arch.hidden()
        )));
    }
    let beta = f64::from_le_bytes(rd.take(8)?.try_into().expect("8 bytes"));
    let scale = ScaleParams::new(beta)?;
    let mut params = Parameters::zeros(&arch);
    let shapes: Vec<Vec<usize>> = params.tensors().iter().map(|t| t.shape.clone()).collect();
    let names = Parameters::tensor_names();
    for (k, slot) in params.tensors_mut().into_iter().enumerate() {
        let rank = rd.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(rd.u32()? as usize);
        }
        if shape != shapes[k] {
            return Err(Error::Format(format!(
                "tensor {} has shape {shape:?}, expected {:?}",
                names[k], shapes[k]
            )));
        }
        let payload = rd.take(4 * slot.len())?;
        for (v, c) in slot.iter_mut().zip(payload.chunks_exact(4)) {
            *v = f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64;
        }
    }
    if rd.at != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - rd.at)));
    }
    CompositeModel::new(arch, params, scale)
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &CompositeModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<CompositeModel> {
    let path = path.as_ref();
    decode_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
