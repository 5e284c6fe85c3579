use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::EmbeddingMatrix;
use crate::rng::{domain, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iter: 300,
            tol: 1e-4,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step, ending with the final assignment.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterAssignment {
    pub fn num_clusters(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters()];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(data: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> Vec<(usize, f64)> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..data.nrows())
            .into_par_iter()
            .map(|i| nearest(data.row(i), centroids))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.rows().into_iter().map(|r| nearest(r, centroids)).collect()
    }
}

fn plus_plus_init(data: ArrayView2<'_, f64>, k: usize, seed: u64) -> Array2<f64> {
    let n = data.nrows();
    let mut rng = stream(seed, &[domain::KMEANS, 0]);
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = data.rows().into_iter().map(|r| sq_dist(r, data.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    if u < w {
                        chosen = i;
                        break;
                    }
                    u -= w;
                    chosen = i;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, row) in data.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(row, data.row(pick)));
        }
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations. Ties go to the lower
/// cluster index; an empty cluster is re-seeded with the point farthest from its
/// current centroid.
pub fn kmeans_points(data: ArrayView2<'_, f64>, params: KMeansParams) -> Result<ClusterAssignment> {
    let (n, _) = data.dim();
    let k = params.k;
    if n == 0 {
        return Err(Error::EmptyEmbedding);
    }
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("cluster count {k} outside 1..={n}")));
    }
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {}", params.tol)));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite embedding".into()));
    }

    let mut centroids = plus_plus_init(data, k, params.seed);
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let assigned = assign(data, &centroids);
        history.push(assigned.iter().map(|a| a.1).sum());
        let mut labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let mut dists: Vec<f64> = assigned.iter().map(|a| a.1).collect();

        let mut sizes = vec![0usize; k];
        for &c in &labels {
            sizes[c] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = donor {
                sizes[labels[i]] -= 1;
                sizes[c] = 1;
                labels[i] = c;
                dists[i] = 0.0;
            }
        }

        let mut sums = Array2::<f64>::zeros(centroids.dim());
        for (i, &c) in labels.iter().enumerate() {
            let mut row = sums.row_mut(c);
            row += &data.row(i);
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if sizes[c] == 0 {
                continue;
            }
            let mean = sums.row(c).mapv(|v| v / sizes[c] as f64);
            shift = shift.max(sq_dist(mean.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&mean);
        }
        if shift <= params.tol {
            break;
        }
    }

    let assigned = assign(data, &centroids);
    let inertia = assigned.iter().map(|a| a.1).sum();
    history.push(inertia);
    Ok(ClusterAssignment {
        labels: assigned.into_iter().map(|a| a.0).collect(),
        centroids,
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// Clusters the rows of an embedding matrix.
pub fn kmeans(
    embedding: &EmbeddingMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterAssignment> {
    let data = embedding.view().mapv(f64::from);
    kmeans_points(
        data.view(),
        KMeansParams {
            k,
            max_iter,
            tol,
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn brute_force_min(data: &Array2<f64>) -> f64 {
        // optimal 2-partition by enumeration, point 0 fixed in part 0
        let n = data.nrows();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << (n - 1)) {
            let part = |i: usize| if i == 0 { 0 } else { (mask >> (i - 1)) & 1 };
            let mut total = 0.0;
            for p in 0..2 {
                let members: Vec<usize> = (0..n).filter(|&i| part(i) == p).collect();
                if members.is_empty() {
                    continue;
                }
                let m = members.len() as f64;
                let mean: Vec<f64> = (0..data.ncols())
                    .map(|j| members.iter().map(|&i| data[[i, j]]).sum::<f64>() / m)
                    .collect();
                for &i in &members {
                    total += (0..data.ncols()).map(|j| (data[[i, j]] - mean[j]).powi(2)).sum::<f64>();
                }
            }
            best = best.min(total);
        }
        best
    }

    fn blobs(seed: u64) -> Array2<f64> {
        let mut rng = stream(seed, &[0]);
        Array2::from_shape_fn((12, 2), |(i, _)| {
            let center = if i < 6 { 0.0 } else { 5.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            center + 0.3 * z
        })
    }

    #[test]
    fn separated_blobs_reach_global_optimum() {
        let data = blobs(1);
        let a = kmeans_points(data.view(), KMeansParams::new(2, 0)).unwrap();
        let opt = brute_force_min(&data);
        assert!((a.inertia - opt).abs() < 1e-9 * opt.max(1.0), "{} vs {opt}", a.inertia);
        assert!(a.labels[..6].iter().all(|&c| c == a.labels[0]));
        assert!(a.labels[6..].iter().all(|&c| c == a.labels[6]));
        assert_ne!(a.labels[0], a.labels[6]);
    }

    #[test]
    fn one_cluster_per_point() {
        let data = blobs(2);
        let a = kmeans_points(data.view(), KMeansParams::new(12, 3)).unwrap();
        assert_eq!(a.inertia, 0.0);
        let mut seen = a.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = blobs(3);
        let a = kmeans_points(data.view(), KMeansParams::new(1, 0)).unwrap();
        let mean = data.mean_axis(ndarray::Axis(0)).unwrap();
        for (c, m) in a.centroids.row(0).iter().zip(&mean) {
            assert!((c - m).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_points_with_many_clusters() {
        let data = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let a = kmeans_points(data.view(), KMeansParams::new(3, 0)).unwrap();
        assert!(a.inertia.abs() < 1e-12);
        assert!(a.labels.iter().all(|&c| c < 3));
    }

    #[test]
    fn rejects_invalid() {
        let data = array![[0.0], [1.0]];
        assert!(kmeans_points(data.view(), KMeansParams::new(0, 0)).is_err());
        assert!(kmeans_points(data.view(), KMeansParams::new(3, 0)).is_err());
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            kmeans_points(empty.view(), KMeansParams::new(1, 0)),
            Err(Error::EmptyEmbedding)
        ));
    }
}
