//! Embeddings and clustering: the pre-processing stage of intra-cluster Mixup.

mod kmeans;
mod pca;

pub use crate::data::EmbeddingMatrix;
pub use kmeans::{kmeans, kmeans_points, ClusterAssignment, KMeansParams};
pub use pca::{pca_embed, PcaModel};

/// Σ over clusters of the majority-class count, divided by N.
pub fn cluster_purity(assignment: &[usize], y: &[usize]) -> crate::Result<f64> {
    if assignment.len() != y.len() {
        return Err(crate::Error::Shape(format!(
            "{} cluster ids for {} labels",
            assignment.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let clusters = assignment.iter().max().map_or(0, |m| m + 1);
    let classes = y.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; clusters * classes];
    for (&c, &label) in assignment.iter().zip(y) {
        counts[c * classes + label] += 1;
    }
    let majority: usize = counts
        .chunks(classes)
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / y.len() as f64)
}
