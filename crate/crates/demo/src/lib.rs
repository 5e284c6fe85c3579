//! WebAssembly bindings for the static demo page in `www/`.

use ndarray::Array2;
use rand::Rng;
use wasm_bindgen::prelude::*;

use cll_core::augment::{sample_beta, sample_dirichlet3, MixKind, MixPolicy};
use cll_core::data::{FeatureMatrix, LabeledSet, OrdinaryLabels};
use cll_core::diagnostics::noise_report;
use cll_core::embed::{cluster_purity, kmeans_points, KMeansParams};
use cll_core::labelgen::{biased_transition, empirical_transition, sample_complementary, uniform_transition};
use cll_core::rng::stream;

fn js_err(e: cll_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Row-major K×K transition matrix; ρ = 1 gives the uniform matrix.
#[wasm_bindgen]
pub fn transition_matrix(k: usize, rho: f64) -> Result<Vec<f64>, JsError> {
    let t = if rho == 1.0 { uniform_transition(k) } else { biased_transition(k, rho) }.map_err(js_err)?;
    Ok(t.entries().iter().copied().collect())
}

/// Empirical transition matrix from `per_class` sampled labels per class.
#[wasm_bindgen]
pub fn sampled_transition(k: usize, rho: f64, per_class: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let t = if rho == 1.0 { uniform_transition(k) } else { biased_transition(k, rho) }.map_err(js_err)?;
    let y = OrdinaryLabels::new((0..k * per_class).map(|i| i % k).collect(), k).map_err(js_err)?;
    let yb = sample_complementary(&y, &t, seed).map_err(js_err)?;
    let e = empirical_transition(y.as_slice(), yb.as_slice(), k).map_err(js_err)?;
    Ok(e.iter().copied().collect())
}

/// Gaussian-ish blobs in the unit square, one per class: (x, y, class) triples.
fn blobs(n: usize, k: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = stream(seed, &[1]);
    let centers: Vec<(f64, f64)> = (0..k)
        .map(|c| {
            let a = std::f64::consts::TAU * c as f64 / k as f64;
            (0.5 + 0.35 * a.cos(), 0.5 + 0.35 * a.sin())
        })
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut x = Array2::zeros((n, 2));
    for (i, &c) in labels.iter().enumerate() {
        // sum of uniforms, roughly normal
        let noise = |rng: &mut cll_core::rng::StreamRng| (0..4).map(|_| rng.random::<f64>() - 0.5).sum::<f64>();
        x[[i, 0]] = (centers[c].0 + spread * noise(&mut rng)).clamp(0.0, 1.0);
        x[[i, 1]] = (centers[c].1 + spread * noise(&mut rng)).clamp(0.0, 1.0);
    }
    (x, labels)
}

#[wasm_bindgen]
pub fn blob_points(n: usize, k: usize, spread: f64, seed: u64) -> Vec<f64> {
    let (x, y) = blobs(n, k, spread, seed);
    (0..n).flat_map(|i| [x[[i, 0]], x[[i, 1]], y[i] as f64]).collect()
}

/// `[mixup noise, icm noise, cluster purity]` under uniform complementary labels.
#[wasm_bindgen]
pub fn noise_explorer(
    n: usize,
    k: usize,
    spread: f64,
    clusters: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let (x, y) = blobs(n, k, spread, seed);
    let assignment = kmeans_points(x.view(), KMeansParams::new(clusters, seed)).map_err(js_err)?;
    let y = OrdinaryLabels::new(y, k).map_err(js_err)?;
    let yb = sample_complementary(&y, &uniform_transition(k).map_err(js_err)?, seed).map_err(js_err)?;
    let purity = cluster_purity(&assignment.labels, y.as_slice()).map_err(js_err)?;
    let set = LabeledSet::new(FeatureMatrix::new(x).map_err(js_err)?, yb)
        .and_then(|s| s.with_ordinary(y))
        .and_then(|s| s.with_clusters(assignment.labels))
        .map_err(js_err)?;
    let ratio = |kind| -> Result<f64, JsError> {
        let p = MixPolicy::new(kind, alpha, 30.0).map_err(js_err)?;
        Ok(noise_report(&p, &set, 5, 128, seed).map_err(js_err)?.noise_ratio)
    };
    Ok(vec![ratio(MixKind::Mixup)?, ratio(MixKind::Icm)?, purity])
}

fn histogram(values: impl Iterator<Item = f64>, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let mut n = 0.0;
    for v in values {
        h[((v * bins as f64) as usize).min(bins - 1)] += 1.0;
        n += 1.0;
    }
    h.iter().map(|c| c / n).collect()
}

/// Normalized histogram of Beta(α, α) draws on [0, 1].
#[wasm_bindgen]
pub fn beta_histogram(alpha: f64, bins: usize, draws: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    if bins == 0 {
        return Err(JsError::new("bins must be positive"));
    }
    let mut rng = stream(seed, &[2]);
    let v = (0..draws).map(|_| sample_beta(alpha, &mut rng)).collect::<Result<Vec<_>, _>>().map_err(js_err)?;
    Ok(histogram(v.into_iter(), bins))
}

/// Histogram of the first coordinate of Dir(α, α, α) draws.
#[wasm_bindgen]
pub fn dirichlet_histogram(alpha: f64, bins: usize, draws: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    if bins == 0 {
        return Err(JsError::new("bins must be positive"));
    }
    let mut rng = stream(seed, &[3]);
    let v = (0..draws)
        .map(|_| sample_dirichlet3(alpha, &mut rng).map(|d| d[0]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js_err)?;
    Ok(histogram(v.into_iter(), bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_heatmap() {
        let t = transition_matrix(4, 1.0).unwrap();
        assert_eq!(t.len(), 16);
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 1.0 / 3.0).abs() < 1e-15);
        let e = sampled_transition(4, 5.0, 5000, 0).unwrap();
        let b = transition_matrix(4, 5.0).unwrap();
        assert!(e.iter().zip(&b).all(|(a, b)| (a - b).abs() < 0.03));
    }

    #[test]
    fn icm_reduces_noise_on_separated_blobs() {
        let r = noise_explorer(600, 4, 0.05, 8, 1.0, 1).unwrap();
        assert!(r[2] > 0.95, "purity {}", r[2]);
        assert!(r[1] < r[0] / 2.0, "{r:?}");
        assert_eq!(blob_points(10, 3, 0.1, 0).len(), 30);
    }

    #[test]
    fn histograms_sum_to_one() {
        for h in [beta_histogram(0.5, 10, 2000, 0).unwrap(), dirichlet_histogram(0.5, 10, 2000, 0).unwrap()] {
            assert_eq!(h.len(), 10);
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let u = beta_histogram(1.0, 4, 40_000, 1).unwrap();
        assert!(u.iter().all(|&p| (p - 0.25).abs() < 0.02));
    }
}
