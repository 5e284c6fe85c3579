use std::path::{Path, PathBuf};

use super::config::{DataFormat, ExperimentConfig};
use super::{load_cifar_bin, load_idx, split_indices, FeatureMatrix, OrdinaryLabels};
use crate::{Error, Result};

/// Feature matrix and oracle labels of one split.
pub type Split = (FeatureMatrix, OrdinaryLabels);

/// Train split and optional evaluation split described by a config.
#[derive(Debug, Clone)]
pub struct DatasetSplits {
    pub train: Split,
    pub test: Option<Split>,
}

fn cifar_files(path: &Path, format: DataFormat) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            match format {
                DataFormat::Cifar100 => name == "train.bin",
                _ => name.starts_with("data_batch_") && name.ends_with(".bin"),
            }
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidData(format!("no CIFAR batch files in {}", path.display())));
    }
    Ok(files)
}

fn load_one(format: DataFormat, images: &Path, labels: Option<&Path>) -> Result<Split> {
    match format {
        DataFormat::Idx => {
            let labels = labels.ok_or_else(|| Error::Config("IDX data needs a labels path".into()))?;
            load_idx(images, labels)
        }
        DataFormat::Cifar10 | DataFormat::Cifar100 => {
            load_cifar_bin(&cifar_files(images, format)?, format == DataFormat::Cifar100)
        }
    }
}

fn check_classes(cfg: &ExperimentConfig, split: Split) -> Result<Split> {
    match cfg.num_classes {
        Some(k) if k != split.1.num_classes() => {
            let (x, y) = split;
            if let Some(bad) = y.as_slice().iter().position(|&v| v >= k) {
                return Err(Error::LabelOutOfRange {
                    index: bad,
                    label: y.as_slice()[bad],
                    num_classes: k,
                });
            }
            let y = OrdinaryLabels::new(y.as_slice().to_vec(), k)?;
            Ok((x, y))
        }
        _ => Ok(split),
    }
}

/// Loads the configured files. Without test files and with a positive
/// `holdout_fraction`, a seeded slice of the training file becomes the test split.
pub fn load_configured(cfg: &ExperimentConfig) -> Result<DatasetSplits> {
    let images = cfg
        .train_images
        .as_deref()
        .ok_or_else(|| Error::Config("train_images is not set".into()))?;
    let full = check_classes(cfg, load_one(cfg.format, images, cfg.train_labels.as_deref())?)?;
    if let Some(test_images) = cfg.test_images.as_deref() {
        let test = check_classes(cfg, load_one(cfg.format, test_images, cfg.test_labels.as_deref())?)?;
        return Ok(DatasetSplits {
            train: full,
            test: Some(test),
        });
    }
    if cfg.holdout_fraction > 0.0 {
        let (tr, te) = split_indices(full.0.rows(), cfg.holdout_fraction, cfg.split_seed);
        let pick = |idx: &[usize]| (full.0.select(idx), full.1.select(idx));
        return Ok(DatasetSplits {
            train: pick(&tr),
            test: Some(pick(&te)),
        });
    }
    Ok(DatasetSplits { train: full, test: None })
}
