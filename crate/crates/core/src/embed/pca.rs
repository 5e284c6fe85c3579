use nalgebra::{DMatrix, SymmetricEigen, SVD};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::EmbeddingMatrix;
use crate::data::FeatureMatrix;
use crate::rng::{domain, stream};
use crate::{Error, Result};

/// Feature dimensions up to which the covariance is diagonalized exactly.
const EXACT_MAX_DIM: usize = 256;
const OVERSAMPLE: usize = 10;
const POWER_ITERS: usize = 4;

/// Centering vector plus `e` orthonormal principal directions (rows).
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    pub singular_values: Vec<f64>,
}

fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn orthonormalize(a: Array2<f64>) -> Array2<f64> {
    let q = to_na(a.view()).qr().q();
    from_na(&q)
}

impl PcaModel {
    pub fn fit(x: ArrayView2<'_, f64>, e: usize, seed: u64) -> Result<Self> {
        let (n, d) = x.dim();
        if e < 1 || e > n.min(d) {
            return Err(Error::InvalidParameter(format!(
                "embedding dimension {e} outside 1..={}",
                n.min(d)
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite input to PCA".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("n >= 1");
        let centered = &x - &mean;

        let (mut directions, mut values): (Vec<Array1<f64>>, Vec<f64>) = if d <= EXACT_MAX_DIM {
            let cov = centered.t().dot(&centered);
            let eig = SymmetricEigen::new(to_na(cov.view()));
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            order
                .iter()
                .take(e)
                .map(|&k| {
                    let v = eig.eigenvectors.column(k);
                    (Array1::from_iter(v.iter().copied()), eig.eigenvalues[k].max(0.0).sqrt())
                })
                .unzip()
        } else {
            randomized_directions(&centered, e, seed)
        };

        // sign convention: largest-magnitude coordinate positive
        for v in &mut directions {
            let pivot = v
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .map_or(1.0, |(_, p)| p);
            if pivot < 0.0 {
                v.mapv_inplace(|c| -c);
            }
        }
        let mut components = Array2::zeros((e, d));
        for (mut row, v) in components.rows_mut().into_iter().zip(&directions) {
            row.assign(v);
        }
        values.truncate(e);
        Ok(Self {
            mean,
            components,
            singular_values: values,
        })
    }

    /// Projects rows of `x` onto the principal directions.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean).dot(&self.components.t())
    }
}

/// Randomized subspace iteration followed by an exact SVD of the projected
/// l×d matrix.
fn randomized_directions(centered: &Array2<f64>, e: usize, seed: u64) -> (Vec<Array1<f64>>, Vec<f64>) {
    let (n, d) = centered.dim();
    let l = (e + OVERSAMPLE).min(n).min(d);
    let mut rng = stream(seed, &[domain::PCA, 0]);
    let omega = Array2::from_shape_simple_fn((d, l), || StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(centered.dot(&omega));
    for _ in 0..POWER_ITERS {
        let z = orthonormalize(centered.t().dot(&q));
        q = orthonormalize(centered.dot(&z));
    }
    let b = q.t().dot(centered);
    let svd = SVD::new(to_na(b.view()), false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order
        .iter()
        .take(e)
        .map(|&k| {
            (
                Array1::from_iter(v_t.row(k).iter().copied()),
                svd.singular_values[k],
            )
        })
        .unzip()
}

/// Centers `x` and projects it onto its top-`e` principal directions.
pub fn pca_embed(x: &FeatureMatrix, e: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let model = PcaModel::fit(x.view(), e, seed)?;
    EmbeddingMatrix::new(model.transform(x.view()).mapv(|v| v as f32))
}
