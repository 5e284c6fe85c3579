//! In-memory dataset types and every on-disk artifact format.

mod cifar;
pub mod config;
mod embeddings;
mod idx;
mod labels;
mod loader;
pub mod results;

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

pub use cifar::load_cifar_bin;
pub use config::ExperimentConfig;
pub use embeddings::{read_embeddings, write_embeddings, EmbeddingMatrix, EMBEDDING_MAGIC};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels};
pub use loader::{load_configured, DatasetSplits, Split};
pub use labels::{
    read_index_map, read_labels_csv, write_index_map, write_labels_csv,
};

/// N×d matrix of instances with every feature in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "feature matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidData(format!(
                "feature value {v} outside [0, 1]"
            )));
        }
        Ok(Self { values })
    }

    /// Scales raw pixel bytes by 1/255.
    pub fn from_pixels(rows: usize, cols: usize, pixels: &[u8]) -> Result<Self> {
        if pixels.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} pixels for a {rows}x{cols} matrix",
                pixels.len()
            )));
        }
        let values = Array2::from_shape_vec(
            (rows, cols),
            pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
        )
        .expect("length checked above");
        Self::new(values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), indices),
        }
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// Ground-truth classes. Only diagnostics and evaluation may look at these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinaryLabels {
    labels: Vec<usize>,
    num_classes: usize,
}

impl OrdinaryLabels {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes <= 2 {
            return Err(Error::InvalidParameter(format!(
                "complementary-label learning needs K > 2 classes, got {num_classes}"
            )));
        }
        check_range(&labels, num_classes)?;
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Infers K as one past the largest label.
    pub fn infer(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, k)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn select(&self, indices: &[usize]) -> OrdinaryLabels {
        OrdinaryLabels {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// One complementary label per instance: a class the instance is *not*.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplementaryLabels {
    labels: Vec<usize>,
    num_classes: usize,
}

impl ComplementaryLabels {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        check_range(&labels, num_classes)?;
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn select(&self, indices: &[usize]) -> ComplementaryLabels {
        ComplementaryLabels {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Checks ȳᵢ ≠ yᵢ against oracle labels.
    pub fn check_against(&self, ordinary: &OrdinaryLabels) -> Result<()> {
        if ordinary.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} complementary labels for {} ordinary labels",
                self.len(),
                ordinary.len()
            )));
        }
        match self
            .labels
            .iter()
            .zip(ordinary.as_slice())
            .position(|(c, y)| c == y)
        {
            Some(i) => Err(Error::InvalidData(format!(
                "complementary label at index {i} equals the ordinary label {}",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }
}

fn check_range(labels: &[usize], num_classes: usize) -> Result<()> {
    match labels.iter().position(|&l| l >= num_classes) {
        Some(index) => Err(Error::LabelOutOfRange {
            index,
            label: labels[index],
            num_classes,
        }),
        None => Ok(()),
    }
}

/// Training instances with their complementary labels, plus the optional
/// oracle labels and cluster ids.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub features: FeatureMatrix,
    pub complementary: ComplementaryLabels,
    pub ordinary: Option<OrdinaryLabels>,
    pub clusters: Option<Vec<usize>>,
}

impl LabeledSet {
    pub fn new(features: FeatureMatrix, complementary: ComplementaryLabels) -> Result<Self> {
        if features.rows() != complementary.len() {
            return Err(Error::Shape(format!(
                "{} instances but {} complementary labels",
                features.rows(),
                complementary.len()
            )));
        }
        Ok(Self {
            features,
            complementary,
            ordinary: None,
            clusters: None,
        })
    }

    pub fn with_ordinary(mut self, ordinary: OrdinaryLabels) -> Result<Self> {
        if ordinary.num_classes() != self.num_classes() {
            return Err(Error::Shape(format!(
                "ordinary labels have {} classes, complementary labels {}",
                ordinary.num_classes(),
                self.num_classes()
            )));
        }
        self.complementary.check_against(&ordinary)?;
        self.ordinary = Some(ordinary);
        Ok(self)
    }

    pub fn with_clusters(mut self, clusters: Vec<usize>) -> Result<Self> {
        if clusters.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} cluster ids for {} instances",
                clusters.len(),
                self.len()
            )));
        }
        self.clusters = Some(clusters);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.complementary.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            features: self.features.select(indices),
            complementary: self.complementary.select(indices),
            ordinary: self.ordinary.as_ref().map(|o| o.select(indices)),
            clusters: self
                .clusters
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }
}

/// Reads a file, transparently inflating it when it starts with the gzip magic.
pub(crate) fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Seeded split of `0..n` into (train, held-out) index lists, both sorted.
pub fn split_indices(n: usize, held_out_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::rng::stream(seed, &[crate::rng::domain::SPLIT, 0]));
    let held = ((n as f64) * held_out_fraction).round() as usize;
    let mut held_out = order[..held].to_vec();
    let mut train = order[held..].to_vec();
    held_out.sort_unstable();
    train.sort_unstable();
    (train, held_out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_matrix_rejects_out_of_range() {
        let bad = Array2::from_elem((1, 2), 1.5);
        assert!(FeatureMatrix::new(bad).is_err());
        assert!(FeatureMatrix::new(Array2::zeros((0, 3))).is_err());
        let m = FeatureMatrix::from_pixels(1, 2, &[0, 255]).unwrap();
        assert_eq!(m.row(0).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn ordinary_labels_need_more_than_two_classes() {
        assert!(OrdinaryLabels::new(vec![0, 1], 2).is_err());
        assert!(matches!(
            OrdinaryLabels::new(vec![0, 3], 3),
            Err(Error::LabelOutOfRange { index: 1, .. })
        ));
        assert_eq!(OrdinaryLabels::infer(vec![0, 4, 2]).unwrap().num_classes(), 5);
    }

    #[test]
    fn complementary_check_against_oracle() {
        let y = OrdinaryLabels::new(vec![0, 1, 2], 3).unwrap();
        let good = ComplementaryLabels::new(vec![1, 2, 0], 3).unwrap();
        let bad = ComplementaryLabels::new(vec![1, 1, 0], 3).unwrap();
        assert!(good.check_against(&y).is_ok());
        assert!(bad.check_against(&y).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        let (a, b) = split_indices(100, 0.1, 3);
        assert_eq!(b.len(), 10);
        let mut all: Vec<_> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(100, 0.1, 3), (a, b));
    }
}
