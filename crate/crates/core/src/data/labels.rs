//! Two-column `index,value` text files: complementary labels, ordinary
//! labels, cluster ids and subset maps all share this layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::ComplementaryLabels;
use crate::{Error, Result};

/// Reads `index,value` lines. Indices may appear in any order but must cover
/// `0..N` exactly once.
pub fn read_index_map(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut pairs = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse = |field: usize, name: &str| -> Result<usize> {
            record
                .get(field)
                .ok_or_else(|| Error::Parse {
                    line: line + 1,
                    msg: format!("missing {name} column"),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: line + 1,
                    msg: format!("bad {name}: {e}"),
                })
        };
        if record.len() != 2 {
            return Err(Error::Parse {
                line: line + 1,
                msg: format!("expected 2 columns, found {}", record.len()),
            });
        }
        pairs.push((parse(0, "index")?, parse(1, "value")?));
    }
    // An index ≥ N always leaves a hole below N, which is what gets reported.
    let n = pairs.len();
    let mut values = vec![None; n];
    for (index, value) in pairs {
        match values.get_mut(index) {
            Some(Some(_)) => return Err(Error::DuplicateIndex(index)),
            Some(slot) => *slot = Some(value),
            None => {}
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(Error::NonContiguous(i)))
        .collect()
}

pub fn write_index_map(path: impl AsRef<Path>, values: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<ComplementaryLabels> {
    ComplementaryLabels::new(read_index_map(path)?, num_classes)
}

pub fn write_labels_csv(path: impl AsRef<Path>, labels: &ComplementaryLabels) -> Result<()> {
    write_index_map(path, labels.as_slice())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}
