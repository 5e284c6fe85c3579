//! CIFAR binary batches: one or two label bytes followed by 3072 pixel bytes.

use std::path::Path;

use super::{read_maybe_gz, FeatureMatrix, OrdinaryLabels};
use crate::{Error, Result};

const PIXELS: usize = 3072;

/// Loads CIFAR-10 batches, or CIFAR-100 batches reduced to their 20 coarse
/// classes when `coarse` is set.
pub fn load_cifar_bin<P: AsRef<Path>>(
    paths: &[P],
    coarse: bool,
) -> Result<(FeatureMatrix, OrdinaryLabels)> {
    let (label_bytes, num_classes) = if coarse { (2, 20) } else { (1, 10) };
    let record = label_bytes + PIXELS;
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let bytes = read_maybe_gz(path.as_ref())?;
        if bytes.is_empty() || bytes.len() % record != 0 {
            return Err(Error::RecordSize {
                len: bytes.len(),
                record,
            });
        }
        for chunk in bytes.chunks_exact(record) {
            // CIFAR-100 stores (coarse, fine); the coarse byte comes first.
            let label = usize::from(chunk[0]);
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    index: labels.len(),
                    label,
                    num_classes,
                });
            }
            labels.push(label);
            pixels.extend_from_slice(&chunk[label_bytes..]);
        }
    }
    let features = FeatureMatrix::from_pixels(labels.len(), PIXELS, &pixels)?;
    Ok((features, OrdinaryLabels::new(labels, num_classes)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_zero_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.bin");
        let mut rec = vec![3u8];
        rec.extend(vec![0u8; PIXELS]);
        std::fs::write(&p, &rec).unwrap();
        let (x, y) = load_cifar_bin(&[&p], false).unwrap();
        assert_eq!((x.rows(), x.cols()), (1, 3072));
        assert!(x.row(0).iter().all(|&v| v == 0.0));
        assert_eq!((y.as_slice(), y.num_classes()), (&[3][..], 10));
    }

    #[test]
    fn coarse_labels_give_twenty_classes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("train.bin");
        let mut bytes = Vec::new();
        for (coarse, fine) in [(19u8, 99u8), (0, 4)] {
            bytes.extend([coarse, fine]);
            bytes.extend(vec![255u8; PIXELS]);
        }
        std::fs::write(&p, &bytes).unwrap();
        let (x, y) = load_cifar_bin(&[&p], true).unwrap();
        assert_eq!(y.num_classes(), 20);
        assert_eq!(y.as_slice(), &[19, 0]);
        assert!(x.view().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn size_and_label_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        std::fs::write(&p, vec![0u8; PIXELS]).unwrap();
        assert!(matches!(load_cifar_bin(&[&p], false), Err(Error::RecordSize { .. })));
        let mut rec = vec![10u8];
        rec.extend(vec![0u8; PIXELS]);
        std::fs::write(&p, &rec).unwrap();
        assert!(matches!(
            load_cifar_bin(&[&p], false),
            Err(Error::LabelOutOfRange { label: 10, .. })
        ));
    }
}
