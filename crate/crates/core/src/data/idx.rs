//! IDX files (MNIST, KMNIST, Fashion-MNIST). Header dims are big-endian u32.

use std::path::Path;

use super::{read_maybe_gz, FeatureMatrix, OrdinaryLabels};
use crate::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn check_magic(bytes: &[u8], what: &'static str, expected: u32, header: usize) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            what,
            expected: header,
            found: bytes.len(),
        });
    }
    let found = be_u32(bytes, 0);
    if found != expected {
        return Err(Error::BadMagic {
            what,
            expected: format!("{expected:#010x}"),
            found: format!("{found:#010x}"),
        });
    }
    if bytes.len() < header {
        return Err(Error::Truncated {
            what,
            expected: header,
            found: bytes.len(),
        });
    }
    Ok(())
}

/// Parses an IDX3 image file into `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    const WHAT: &str = "IDX images";
    check_magic(bytes, WHAT, IMAGES_MAGIC, 16)?;
    let n = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let expected = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_add(16))
        .ok_or_else(|| Error::InvalidData(format!("{WHAT}: header dimensions overflow")))?;
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
    Ok((n, rows, cols, &bytes[16..]))
}

/// Parses an IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    const WHAT: &str = "IDX labels";
    check_magic(bytes, WHAT, LABELS_MAGIC, 8)?;
    let n = be_u32(bytes, 4) as usize;
    let expected = n + 8;
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
    Ok(&bytes[8..])
}

/// Loads an image/label IDX pair; either file may be gzip-compressed.
///
/// Pixels are scaled by 1/255 and each image is flattened to `rows * cols`
/// features. K is inferred as one past the largest label.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(FeatureMatrix, OrdinaryLabels)> {
    let image_bytes = read_maybe_gz(images_path.as_ref())?;
    let label_bytes = read_maybe_gz(labels_path.as_ref())?;
    let (n, rows, cols, pixels) = parse_idx_images(&image_bytes)?;
    let labels = parse_idx_labels(&label_bytes)?;
    if labels.len() != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    let features = FeatureMatrix::from_pixels(n, rows * cols, pixels)?;
    let labels = OrdinaryLabels::infer(labels.iter().map(|&l| usize::from(l)).collect())?;
    Ok((features, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: u32, rows: u32, cols: u32, fill: u8) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend(IMAGES_MAGIC.to_be_bytes());
        v.extend(n.to_be_bytes());
        v.extend(rows.to_be_bytes());
        v.extend(cols.to_be_bytes());
        v.extend(std::iter::repeat_n(fill, (n * rows * cols) as usize));
        v
    }

    fn labels(values: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend(LABELS_MAGIC.to_be_bytes());
        v.extend((values.len() as u32).to_be_bytes());
        v.extend(values);
        v
    }

    fn write_pair(dir: &Path, img: &[u8], lab: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let a = dir.join("img");
        let b = dir.join("lab");
        std::fs::write(&a, img).unwrap();
        std::fs::write(&b, lab).unwrap();
        (a, b)
    }

    #[test]
    fn single_zero_image() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = write_pair(dir.path(), &images(1, 28, 28, 0), &labels(&[9]));
        let (x, y) = load_idx(a, b).unwrap();
        assert_eq!((x.rows(), x.cols()), (1, 784));
        assert!(x.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(y.as_slice(), &[9]);
    }

    #[test]
    fn pixel_255_maps_to_one() {
        let bytes = images(1, 2, 2, 255);
        let (_, _, _, px) = parse_idx_images(&bytes).unwrap();
        let x = FeatureMatrix::from_pixels(1, 4, px).unwrap();
        assert!(x.row(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn distinct_errors() {
        let mut bad = images(1, 2, 2, 0);
        bad[3] = 0x01;
        assert!(matches!(parse_idx_images(&bad), Err(Error::BadMagic { .. })));

        let mut short = images(2, 2, 2, 0);
        short.truncate(short.len() - 1);
        assert!(matches!(parse_idx_images(&short), Err(Error::Truncated { .. })));
        assert!(matches!(parse_idx_labels(&[0, 0]), Err(Error::Truncated { .. })));

        let dir = tempfile::tempdir().unwrap();
        let (a, b) = write_pair(dir.path(), &images(2, 2, 2, 0), &labels(&[0, 1, 2]));
        assert!(matches!(
            load_idx(a, b),
            Err(Error::CountMismatch { images: 2, labels: 3 })
        ));
    }
}
