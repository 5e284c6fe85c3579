//! `CLLEMB01` embedding files.
//!
//! ```text
//! bytes 0-7    "CLLEMB01"
//! bytes 8-11   N, u32 little-endian
//! bytes 12-15  e, u32 little-endian
//! bytes 16..   N*e f32 little-endian, row-major
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"CLLEMB01";

/// N×e embedding vectors, stored in single precision to match the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Array2<f32>,
}

impl EmbeddingMatrix {
    pub fn new(values: Array2<f32>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyEmbedding);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite embedding value".into()));
        }
        Ok(Self { values })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f32> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f32> {
        self.values.row(i)
    }

    pub fn select(&self, indices: &[usize]) -> EmbeddingMatrix {
        EmbeddingMatrix {
            values: self.values.select(ndarray::Axis(0), indices),
        }
    }
}

pub fn write_embeddings(path: impl AsRef<Path>, emb: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(16 + 4 * emb.values.len());
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend((emb.rows() as u32).to_le_bytes());
    out.extend((emb.cols() as u32).to_le_bytes());
    for v in emb.values.iter() {
        out.extend(v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&bytes)
}

fn parse_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    const WHAT: &str = "embedding file";
    if bytes.len() < 16 {
        if bytes.len() >= 8 && &bytes[..8] != EMBEDDING_MAGIC {
            return Err(bad_magic(&bytes[..8]));
        }
        return Err(Error::Truncated {
            what: WHAT,
            expected: 16,
            found: bytes.len(),
        });
    }
    if &bytes[..8] != EMBEDDING_MAGIC {
        return Err(bad_magic(&bytes[..8]));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let e = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if n == 0 {
        return Err(Error::EmptyEmbedding);
    }
    let expected = 16 + 4 * n * e;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            what: WHAT,
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::SizeMismatch {
            what: WHAT,
            expected,
            found: bytes.len(),
        });
    }
    let values: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(Array2::from_shape_vec((n, e), values).expect("size checked"))
}

fn bad_magic(found: &[u8]) -> Error {
    Error::BadMagic {
        what: "embedding file",
        expected: "CLLEMB01".into(),
        found: String::from_utf8_lossy(found).into_owned(),
    }
}
