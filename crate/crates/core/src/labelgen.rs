//! Complementary-label synthesis under the three imbalance setups.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use rand::Rng;

use crate::data::{ComplementaryLabels, OrdinaryLabels};
use crate::rng::{domain, stream};
use crate::{Error, Result};

/// Row-stochastic K×K matrix with zero diagonal; entry (r, c) is
/// P(ȳ = c | y = r).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Array2<f64>,
}

impl TransitionMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let k = entries.nrows();
        if entries.ncols() != k {
            return Err(Error::Shape(format!(
                "transition matrix must be square, got {}x{}",
                k,
                entries.ncols()
            )));
        }
        if k <= 2 {
            return Err(Error::InvalidParameter(format!("need K > 2, got {k}")));
        }
        for (r, row) in entries.rows().into_iter().enumerate() {
            if row[r] != 0.0 {
                return Err(Error::InvalidData(format!("diagonal entry ({r},{r}) is nonzero")));
            }
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidData(format!("row {r} has a negative or non-finite entry")));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidData(format!("row {r} sums to {sum}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn num_classes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn row(&self, r: usize) -> ArrayView1<'_, f64> {
        self.entries.row(r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[[r, c]]
    }
}

/// Every off-diagonal entry is 1/(K−1).
pub fn uniform_transition(k: usize) -> Result<TransitionMatrix> {
    if k <= 2 {
        return Err(Error::InvalidParameter(format!("need K > 2, got {k}")));
    }
    let mut entries = Array2::from_elem((k, k), 1.0 / (k as f64 - 1.0));
    entries.diag_mut().fill(0.0);
    TransitionMatrix::new(entries)
}

/// Geometric decay over circular offsets: in row r, column (r + o) mod K gets
/// weight q^(o−1) for o = 1..K−1 with q = ρ^(−1/(K−2)), so the largest entry
/// of each row is exactly ρ times its smallest off-diagonal entry.
pub fn biased_transition(k: usize, rho: f64) -> Result<TransitionMatrix> {
    if k <= 2 {
        return Err(Error::InvalidParameter(format!("need K > 2, got {k}")));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("imbalance ratio must be >= 1, got {rho}")));
    }
    let q = rho.powf(-1.0 / (k as f64 - 2.0));
    let weights: Vec<f64> = (0..k - 1).map(|o| q.powi(o as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut entries = Array2::zeros((k, k));
    for r in 0..k {
        for (o, w) in weights.iter().enumerate() {
            entries[[r, (r + o + 1) % k]] = w / total;
        }
    }
    TransitionMatrix::new(entries)
}

/// Target size of class `class` in a long-tailed subsample:
/// round(n₀ · ρ^(−k/(K−1))).
pub fn longtail_class_size(head: usize, rho: f64, class: usize, num_classes: usize) -> usize {
    let exponent = -(class as f64) / (num_classes as f64 - 1.0);
    (head as f64 * rho.powf(exponent)).round() as usize
}

/// Seeded long-tailed subsample of `y`; returns kept indices in ascending order.
///
/// Class k keeps round(n₀ · ρ^(−k/(K−1))) instances where n₀ is the size of
/// class 0. A class smaller than its target is kept whole, and ρ = 1 keeps
/// every instance.
pub fn longtail_subsample(y: &OrdinaryLabels, rho: f64, seed: u64) -> Result<Vec<usize>> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("imbalance ratio must be >= 1, got {rho}")));
    }
    if rho == 1.0 {
        return Ok((0..y.len()).collect());
    }
    let k = y.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in y.as_slice().iter().enumerate() {
        by_class[c].push(i);
    }
    let head = by_class[0].len();
    let mut kept = Vec::new();
    for (class, members) in by_class.iter().enumerate() {
        let target = longtail_class_size(head, rho, class, k);
        if target < 1 {
            return Err(Error::InvalidParameter(format!(
                "class {class} rounds to zero instances (head size {head}, rho {rho})"
            )));
        }
        let take = target.min(members.len());
        let mut rng = stream(seed, &[domain::LONGTAIL, class as u64]);
        let mut chosen: Vec<usize> = sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|j| members[j])
            .collect();
        chosen.sort_unstable();
        kept.extend(chosen);
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Inverse-CDF draw from `row`; zero-probability columns are never returned.
fn draw_from_row(row: ArrayView1<'_, f64>, u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (c, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = c;
            if u < cumulative {
                return c;
            }
        }
    }
    // rounding left the cumulative sum just below 1
    last_positive
}

/// Draws ȳᵢ from row yᵢ of `t`, using the stream keyed by `(seed, i)`.
pub fn sample_complementary(
    y: &OrdinaryLabels,
    t: &TransitionMatrix,
    seed: u64,
) -> Result<ComplementaryLabels> {
    if y.num_classes() != t.num_classes() {
        return Err(Error::Shape(format!(
            "{} classes in labels but {} in the transition matrix",
            y.num_classes(),
            t.num_classes()
        )));
    }
    let draw = |(i, &label): (usize, &usize)| {
        let u: f64 = stream(seed, &[domain::COMPLEMENTARY, i as u64]).random();
        draw_from_row(t.row(label), u)
    };
    #[cfg(feature = "parallel")]
    let labels: Vec<usize> = {
        use rayon::prelude::*;
        y.as_slice().par_iter().enumerate().map(draw).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let labels: Vec<usize> = y.as_slice().iter().enumerate().map(draw).collect();
    ComplementaryLabels::new(labels, t.num_classes())
}

/// Row-normalized co-occurrence counts of (y, ȳ); rows without observations
/// stay zero.
pub fn empirical_transition(y: &[usize], ybar: &[usize], k: usize) -> Result<Array2<f64>> {
    if y.len() != ybar.len() {
        return Err(Error::Shape(format!(
            "{} ordinary labels but {} complementary labels",
            y.len(),
            ybar.len()
        )));
    }
    let mut counts = Array2::<f64>::zeros((k, k));
    for (index, (&r, &c)) in y.iter().zip(ybar).enumerate() {
        if r >= k || c >= k {
            return Err(Error::LabelOutOfRange {
                index,
                label: r.max(c),
                num_classes: k,
            });
        }
        counts[[r, c]] += 1.0;
    }
    for mut row in counts.rows_mut() {
        let total = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    /// Long-tailed ordinary classes, uniform transition matrix.
    ImbalancedOrdinary,
    /// Balanced ordinary classes, biased transition matrix.
    BiasedTransition,
    /// Both.
    Both,
}

impl Setup {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Setup::ImbalancedOrdinary),
            2 => Ok(Setup::BiasedTransition),
            3 => Ok(Setup::Both),
            _ => Err(Error::InvalidParameter(format!("setup must be 1, 2 or 3, got {id}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceSpec {
    pub setup: Setup,
    pub rho_ordinary: f64,
    pub rho_transition: f64,
}

/// Output of a full label-generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedLabels {
    /// Indices into the original dataset, ascending.
    pub kept: Vec<usize>,
    pub transition: TransitionMatrix,
    /// Complementary labels aligned with `kept`.
    pub complementary: ComplementaryLabels,
}

/// Applies an imbalance setup: optional long-tail subsampling, then
/// complementary sampling from a uniform or biased matrix. Ratios not used by
/// the setup are ignored.
pub fn generate(y: &OrdinaryLabels, spec: &ImbalanceSpec, seed: u64) -> Result<GeneratedLabels> {
    let k = y.num_classes();
    let (kept, transition) = match spec.setup {
        Setup::ImbalancedOrdinary => (longtail_subsample(y, spec.rho_ordinary, seed)?, uniform_transition(k)?),
        Setup::BiasedTransition => ((0..y.len()).collect(), biased_transition(k, spec.rho_transition)?),
        Setup::Both => (
            longtail_subsample(y, spec.rho_ordinary, seed)?,
            biased_transition(k, spec.rho_transition)?,
        ),
    };
    let subset = y.select(&kept);
    let complementary = sample_complementary(&subset, &transition, seed)?;
    Ok(GeneratedLabels {
        kept,
        transition,
        complementary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(k: usize, per_class: usize) -> OrdinaryLabels {
        OrdinaryLabels::new((0..k * per_class).map(|i| i % k).collect(), k).unwrap()
    }

    #[test]
    fn uniform_k3_and_k10() {
        let t = uniform_transition(3).unwrap();
        let expected = ndarray::array![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
        assert_eq!(t.entries(), &expected);
        let t = uniform_transition(10).unwrap();
        for r in 0..10 {
            for c in 0..10 {
                let want = if r == c { 0.0 } else { 1.0 / 9.0 };
                assert!((t.get(r, c) - want).abs() < 1e-15);
            }
        }
        assert!(uniform_transition(2).is_err());
    }

    #[test]
    fn biased_k3_rho10() {
        let t = biased_transition(3, 10.0).unwrap();
        for r in 0..3 {
            let mut off: Vec<f64> = (0..3).filter(|&c| c != r).map(|c| t.get(r, c)).collect();
            off.sort_by(f64::total_cmp);
            assert!((off[0] - 1.0 / 11.0).abs() < 1e-15);
            assert!((off[1] - 10.0 / 11.0).abs() < 1e-15);
        }
        assert_eq!(biased_transition(10, 1.0).unwrap(), uniform_transition(10).unwrap());
        assert!(biased_transition(10, 0.5).is_err());
    }

    #[test]
    fn biased_ratio_is_rho() {
        for k in [3, 4, 10, 20] {
            for rho in [1.0, 3.0, 10.0, 100.0] {
                let t = biased_transition(k, rho).unwrap();
                for r in 0..k {
                    let off: Vec<f64> = (0..k).filter(|&c| c != r).map(|c| t.get(r, c)).collect();
                    let max = off.iter().cloned().fold(f64::MIN, f64::max);
                    let min = off.iter().cloned().fold(f64::MAX, f64::min);
                    assert!((max / min - rho).abs() < 1e-9 * rho, "k={k} rho={rho}");
                }
            }
        }
    }

    #[test]
    fn longtail_sizes() {
        // 5000 · 100^(−3/9) = 1077.2…, 5000 · 100^(−1) = 50
        assert_eq!(longtail_class_size(5000, 100.0, 3, 10), 1077);
        assert_eq!(longtail_class_size(5000, 100.0, 9, 10), 50);
        let y = balanced(10, 5000);
        let kept = longtail_subsample(&y, 100.0, 1).unwrap();
        let counts = y.select(&kept).class_counts();
        assert_eq!(counts[0], 5000);
        assert_eq!(counts[3], 1077);
        assert_eq!(counts[9], 50);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(longtail_subsample(&y, 1.0, 1).unwrap(), (0..50_000).collect::<Vec<_>>());
        let uneven = OrdinaryLabels::new(vec![0, 1, 1, 2, 2, 2], 3).unwrap();
        assert_eq!(longtail_subsample(&uneven, 1.0, 1).unwrap(), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn longtail_too_small_fails() {
        let y = balanced(10, 5);
        assert!(longtail_subsample(&y, 100.0, 0).is_err());
    }

    #[test]
    fn degenerate_row_is_forced() {
        let mut e = Array2::zeros((3, 3));
        e[[0, 2]] = 1.0;
        e[[1, 0]] = 1.0;
        e[[2, 1]] = 1.0;
        let t = TransitionMatrix::new(e).unwrap();
        let y = OrdinaryLabels::new(vec![0; 1000], 3).unwrap();
        let ybar = sample_complementary(&y, &t, 5).unwrap();
        assert!(ybar.as_slice().iter().all(|&c| c == 2));
    }

    #[test]
    fn uniform_k3_frequencies() {
        let y = OrdinaryLabels::new(vec![0; 100_000], 3).unwrap();
        let ybar = sample_complementary(&y, &uniform_transition(3).unwrap(), 11).unwrap();
        let ones = ybar.as_slice().iter().filter(|&&c| c == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01);
        assert!(ybar.as_slice().iter().all(|&c| c != 0));
    }

    #[test]
    fn empirical_transition_edge_cases() {
        let e = empirical_transition(&[0], &[1], 3).unwrap();
        assert_eq!(e, ndarray::array![[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(empirical_transition(&[], &[], 3).unwrap(), Array2::zeros((3, 3)));
        assert!(empirical_transition(&[0], &[], 3).is_err());
    }

    #[test]
    fn transition_validation() {
        let mut e = Array2::from_elem((3, 3), 0.5);
        assert!(TransitionMatrix::new(e.clone()).is_err());
        e.diag_mut().fill(0.0);
        assert!(TransitionMatrix::new(e.clone()).is_ok());
        e[[0, 1]] = 0.6;
        assert!(TransitionMatrix::new(e).is_err());
    }

    #[test]
    fn setup3_is_subsample_then_biased_sampling() {
        let y = balanced(10, 300);
        let spec = ImbalanceSpec {
            setup: Setup::Both,
            rho_ordinary: 10.0,
            rho_transition: 5.0,
        };
        let out = generate(&y, &spec, 42).unwrap();
        let kept = longtail_subsample(&y, 10.0, 42).unwrap();
        let t = biased_transition(10, 5.0).unwrap();
        let ybar = sample_complementary(&y.select(&kept), &t, 42).unwrap();
        assert_eq!(out.kept, kept);
        assert_eq!(out.transition, t);
        assert_eq!(out.complementary, ybar);
    }
}
