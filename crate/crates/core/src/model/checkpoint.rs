use std::io::Write;
use std::path::Path;

use super::Mlp;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CLLMDL01";

/// Magic, u32 LE layer count, u32 LE widths, then f64 LE parameters.
pub fn encode_checkpoint(model: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * model.dims().len() + 8 * model.num_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(model.dims().len() as u32).to_le_bytes());
    for &d in model.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Mlp> {
    const WHAT: &str = "model checkpoint";
    let truncated = |expected: usize| Error::Truncated {
        what: WHAT,
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 12 {
        return Err(truncated(12));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            what: WHAT,
            expected: String::from_utf8_lossy(CHECKPOINT_MAGIC).into_owned(),
            found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let layers = u32_at(8);
    let header = 12 + 4 * layers;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> = (0..layers).map(|l| u32_at(12 + 4 * l)).collect();
    let count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let total = header + 8 * count;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    if bytes.len() > total {
        return Err(Error::SizeMismatch {
            what: WHAT,
            expected: total,
            found: bytes.len(),
        });
    }
    let params = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Mlp::new(dims, params)
}

pub fn write_checkpoint(path: &Path, model: &Mlp) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Mlp> {
    decode_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
