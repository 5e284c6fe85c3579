//! Mixup-family augmentation on complementary-labeled data.
//!
//! Batches are generated from a `LabeledSet` and a list of instance indices;
//! every synthetic row records its source instances (as indices into the set)
//! and the coefficients used, so downstream diagnostics can replay it.

pub mod noise;
mod sample;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::config::PolicyName;
use crate::data::LabeledSet;
use crate::rng::{domain, stream};
use crate::{Error, Result};

pub use noise::{is_noisy, noise_ratio, oracle_filter, pair_stats, passes, FilterMode, PairStats};
pub use sample::{sample_beta, sample_dirichlet3};

pub const DEFAULT_IDW_C: f64 = 30.0;

/// A distribution over the K classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel(Vec<f64>);

impl SoftLabel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidData("soft label weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidData(format!("soft label sums to {s}")));
        }
        Ok(Self(weights))
    }

    pub fn one_hot(k: usize, num_classes: usize) -> Self {
        let mut w = vec![0.0; num_classes];
        w[k] = 1.0;
        Self(w)
    }

    /// Places `coeffs[s]` on class `labels[s]`, accumulating repeats.
    pub fn from_parts(labels: &[usize], coeffs: &[f64], num_classes: usize) -> Self {
        let mut w = vec![0.0; num_classes];
        for (&l, &c) in labels.iter().zip(coeffs) {
            w[l] += c;
        }
        Self(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(k, _)| k).collect()
    }
}

/// Instances a synthetic row was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sources {
    Pair(usize, usize),
    Triple(usize, usize, usize),
}

impl Sources {
    pub fn indices(&self) -> Vec<usize> {
        match *self {
            Sources::Pair(i, j) => vec![i, j],
            Sources::Triple(i, j, k) => vec![i, j, k],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBatch {
    pub inputs: Array2<f64>,
    pub labels: Vec<SoftLabel>,
    /// Coefficients on the source inputs.
    pub input_coeffs: Vec<Vec<f64>>,
    /// Coefficients on the source complementary labels.
    pub label_coeffs: Vec<Vec<f64>>,
    pub sources: Vec<Sources>,
}

impl SyntheticBatch {
    pub fn empty(dim: usize) -> Self {
        Self {
            inputs: Array2::zeros((0, dim)),
            labels: Vec::new(),
            input_coeffs: Vec::new(),
            label_coeffs: Vec::new(),
            sources: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Soft labels as an M×K matrix.
    pub fn label_matrix(&self, num_classes: usize) -> Array2<f64> {
        let mut m = Array2::zeros((self.len(), num_classes));
        for (mut row, l) in m.rows_mut().into_iter().zip(&self.labels) {
            row.assign(&ArrayView1::from(l.weights()));
        }
        m
    }

    pub fn retain_rows(&self, keep: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(ndarray::Axis(0), keep),
            labels: keep.iter().map(|&k| self.labels[k].clone()).collect(),
            input_coeffs: keep.iter().map(|&k| self.input_coeffs[k].clone()).collect(),
            label_coeffs: keep.iter().map(|&k| self.label_coeffs[k].clone()).collect(),
            sources: keep.iter().map(|&k| self.sources[k]).collect(),
        }
    }

    fn push(&mut self, rows: &mut Vec<f64>, x: Array1<f64>, label: SoftLabel, ic: Vec<f64>, lc: Vec<f64>, src: Sources) {
        rows.extend(x.iter());
        self.labels.push(label);
        self.input_coeffs.push(ic);
        self.label_coeffs.push(lc);
        self.sources.push(src);
    }

    fn finish(mut self, rows: Vec<f64>, dim: usize) -> Self {
        self.inputs = Array2::from_shape_vec((self.labels.len(), dim), rows).expect("row count matches");
        self
    }
}

/// x̃ = λxᵢ + (1−λ)xⱼ with ỹ = λ on ȳᵢ and 1−λ on ȳⱼ.
pub fn mix_pair(
    xi: ArrayView1<'_, f64>,
    xj: ArrayView1<'_, f64>,
    ybar_i: usize,
    ybar_j: usize,
    lambda: f64,
    num_classes: usize,
) -> Result<(Array1<f64>, SoftLabel)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("mixing coefficient {lambda} outside [0, 1]")));
    }
    if xi.len() != xj.len() {
        return Err(Error::Shape(format!("inputs of length {} and {}", xi.len(), xj.len())));
    }
    if ybar_i >= num_classes || ybar_j >= num_classes {
        return Err(Error::InvalidParameter(format!("label outside {num_classes} classes")));
    }
    let x = &xi * lambda + &xj * (1.0 - lambda);
    Ok((x, SoftLabel::from_parts(&[ybar_i, ybar_j], &[lambda, 1.0 - lambda], num_classes)))
}

/// Inverse-distance weights of x̃ to three sources; a zero distance counts as `c`.
pub fn idw_weights(x: ArrayView1<'_, f64>, sources: [ArrayView1<'_, f64>; 3], c: f64) -> [f64; 3] {
    let inv = sources.map(|s| {
        let d = x.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        1.0 / if d == 0.0 { c } else { d }
    });
    let total: f64 = inv.iter().sum();
    inv.map(|v| v / total)
}

fn check_batch(set: &LabeledSet, indices: &[usize]) -> Result<()> {
    match indices.iter().find(|&&i| i >= set.len()) {
        Some(i) => Err(Error::Shape(format!("batch index {i} outside {} instances", set.len()))),
        None => Ok(()),
    }
}

fn mixed_pair_row(set: &LabeledSet, i: usize, j: usize, lambda: f64) -> (Array1<f64>, SoftLabel, Vec<f64>) {
    let yb = set.complementary.as_slice();
    let (x, label) = mix_pair(set.features.row(i), set.features.row(j), yb[i], yb[j], lambda, set.num_classes())
        .expect("validated inputs");
    (x, label, vec![lambda, 1.0 - lambda])
}

/// Pairs each batch member with its image under a seeded permutation.
pub fn make_batch_mixup(set: &LabeledSet, indices: &[usize], alpha: f64, seed: u64, batch_id: u64) -> Result<SyntheticBatch> {
    if indices.len() < 2 {
        return Err(Error::InvalidParameter(format!("mixup needs at least 2 instances, got {}", indices.len())));
    }
    check_batch(set, indices)?;
    let mut perm: Vec<usize> = (0..indices.len()).collect();
    perm.shuffle(&mut stream(seed, &[domain::MIX, batch_id, 0, 0]));
    let mut out = SyntheticBatch::empty(set.dim());
    let mut rows = Vec::with_capacity(indices.len() * set.dim());
    for (r, &p) in perm.iter().enumerate() {
        let lambda = sample_beta(alpha, &mut stream(seed, &[domain::MIX, batch_id, 1, r as u64]))?;
        let (i, j) = (indices[r], indices[p]);
        let (x, label, coeffs) = mixed_pair_row(set, i, j, lambda);
        out.push(&mut rows, x, label, coeffs.clone(), coeffs, Sources::Pair(i, j));
    }
    Ok(out.finish(rows, set.dim()))
}

/// Members of each cluster in batch order; cluster ids in ascending order.
fn cluster_members(set: &LabeledSet, indices: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
    let clusters = set.clusters.as_ref().ok_or(Error::MissingClusters("intra-cluster mixing"))?;
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &i in indices {
        groups.entry(clusters[i]).or_default().push(i);
    }
    Ok(groups.into_iter().collect())
}

/// For every cluster u with |B_u| ≥ 2, emits |B_u| pairs of distinct members:
/// each member in turn, with a partner drawn uniformly from the others.
pub fn make_batch_icm(set: &LabeledSet, indices: &[usize], alpha: f64, seed: u64, batch_id: u64) -> Result<SyntheticBatch> {
    check_batch(set, indices)?;
    sample::check_alpha(alpha)?;
    let mut out = SyntheticBatch::empty(set.dim());
    let mut rows = Vec::with_capacity(indices.len() * set.dim());
    for (u, members) in cluster_members(set, indices)? {
        if members.len() < 2 {
            continue;
        }
        for m in 0..members.len() {
            let mut rng = stream(seed, &[domain::MIX, batch_id, 2, u as u64, m as u64]);
            let r = rng.random_range(0..members.len() - 1);
            let (i, j) = (members[m], members[r + usize::from(r >= m)]);
            let lambda = sample_beta(alpha, &mut rng)?;
            let (x, label, coeffs) = mixed_pair_row(set, i, j, lambda);
            out.push(&mut rows, x, label, coeffs.clone(), coeffs, Sources::Pair(i, j));
        }
    }
    Ok(out.finish(rows, set.dim()))
}

/// Three distinct in-cluster sources per row (each member in turn plus two
/// others), Dirichlet input coefficients and inverse-distance label
/// coefficients.
pub fn make_batch_micm(
    set: &LabeledSet,
    indices: &[usize],
    alpha: f64,
    c: f64,
    seed: u64,
    batch_id: u64,
) -> Result<SyntheticBatch> {
    check_batch(set, indices)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("IDW constant must be positive, got {c}")));
    }
    sample::check_alpha(alpha)?;
    let yb = set.complementary.as_slice();
    let mut out = SyntheticBatch::empty(set.dim());
    let mut rows = Vec::with_capacity(indices.len() * set.dim());
    for (u, members) in cluster_members(set, indices)? {
        if members.len() < 3 {
            continue;
        }
        for m in 0..members.len() {
            let mut rng = stream(seed, &[domain::MIX, batch_id, 3, u as u64, m as u64]);
            let pick = sample_indices(&mut rng, members.len() - 1, 2);
            let other = |r: usize| members[r + usize::from(r >= m)];
            let src = [members[m], other(pick.index(0)), other(pick.index(1))];
            let lam = sample_dirichlet3(alpha, &mut rng)?;
            let feats = src.map(|s| set.features.row(s));
            let x = &feats[0] * lam[0] + &feats[1] * lam[1] + &feats[2] * lam[2];
            let w = idw_weights(x.view(), feats, c);
            let label = SoftLabel::from_parts(&src.map(|s| yb[s]), &w, set.num_classes());
            out.push(&mut rows, x, label, lam.to_vec(), w.to_vec(), Sources::Triple(src[0], src[1], src[2]));
        }
    }
    Ok(out.finish(rows, set.dim()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixKind {
    Mixup,
    Icm,
    Micm,
    MixupNf,
    IntraClassNf,
    ExtraClassNf,
}

impl MixKind {
    pub fn from_policy(p: PolicyName) -> Option<Self> {
        Some(match p {
            PolicyName::None => return None,
            PolicyName::Mixup => MixKind::Mixup,
            PolicyName::Icm => MixKind::Icm,
            PolicyName::Micm => MixKind::Micm,
            PolicyName::MixupNf => MixKind::MixupNf,
            PolicyName::IntraClassNf => MixKind::IntraClassNf,
            PolicyName::ExtraClassNf => MixKind::ExtraClassNf,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MixKind::Mixup => "mixup",
            MixKind::Icm => "icm",
            MixKind::Micm => "micm",
            MixKind::MixupNf => "mixup-nf",
            MixKind::IntraClassNf => "intra-class-nf",
            MixKind::ExtraClassNf => "extra-class-nf",
        }
    }

    pub fn needs_clusters(self) -> bool {
        matches!(self, MixKind::Icm | MixKind::Micm)
    }

    pub fn needs_oracle(self) -> bool {
        matches!(self, MixKind::MixupNf | MixKind::IntraClassNf | MixKind::ExtraClassNf)
    }

    fn filter(self) -> Option<FilterMode> {
        match self {
            MixKind::MixupNf => Some(FilterMode::MixupNf),
            MixKind::IntraClassNf => Some(FilterMode::IntraClass),
            MixKind::ExtraClassNf => Some(FilterMode::ExtraClass),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixPolicy {
    pub kind: MixKind,
    pub alpha: f64,
    pub idw_c: f64,
}

impl MixPolicy {
    pub fn new(kind: MixKind, alpha: f64, idw_c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if kind == MixKind::Micm && !(idw_c > 0.0) {
            return Err(Error::InvalidParameter(format!("IDW constant must be positive, got {idw_c}")));
        }
        Ok(Self { kind, alpha, idw_c })
    }

    /// Synthesizes one batch from the instances `indices` of `set`.
    pub fn generate(&self, set: &LabeledSet, indices: &[usize], seed: u64, batch_id: u64) -> Result<SyntheticBatch> {
        match self.kind {
            MixKind::Icm => make_batch_icm(set, indices, self.alpha, seed, batch_id),
            MixKind::Micm => make_batch_micm(set, indices, self.alpha, self.idw_c, seed, batch_id),
            kind => {
                let batch = make_batch_mixup(set, indices, self.alpha, seed, batch_id)?;
                match kind.filter() {
                    None => Ok(batch),
                    Some(mode) => {
                        let y = set.ordinary.as_ref().map(|o| o.as_slice());
                        let keep = oracle_filter(&batch.sources, y, set.complementary.as_slice(), mode)?;
                        Ok(batch.retain_rows(&keep))
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ComplementaryLabels, FeatureMatrix, OrdinaryLabels};
    use ndarray::array;

    fn toy_set(n: usize, k: usize, seed: u64) -> LabeledSet {
        let mut rng = stream(seed, &[99]);
        let x = Array2::from_shape_simple_fn((n, 4), || rng.random::<f64>());
        let y: Vec<usize> = (0..n).map(|i| i % k).collect();
        let yb: Vec<usize> = y.iter().map(|&c| (c + 1 + rng.random_range(0..k - 1)) % k).collect();
        LabeledSet::new(FeatureMatrix::new(x).unwrap(), ComplementaryLabels::new(yb, k).unwrap())
            .unwrap()
            .with_ordinary(OrdinaryLabels::new(y, k).unwrap())
            .unwrap()
    }

    #[test]
    fn mix_pair_cases() {
        let a = array![1.0, 0.0];
        let b = array![0.0, 1.0];
        let (x, l) = mix_pair(a.view(), b.view(), 2, 5, 1.0, 10).unwrap();
        assert_eq!(x, a);
        assert_eq!(l, SoftLabel::one_hot(2, 10));
        let (_, l) = mix_pair(a.view(), b.view(), 2, 5, 0.5, 10).unwrap();
        assert_eq!(l.support(), vec![2, 5]);
        assert_eq!(l.weights()[2], 0.5);
        let (_, l) = mix_pair(a.view(), b.view(), 3, 3, 0.37, 10).unwrap();
        assert_eq!(l, SoftLabel::one_hot(3, 10));
        assert!(mix_pair(a.view(), b.view(), 3, 3, 1.2, 10).is_err());
    }

    #[test]
    fn idw_cases() {
        let o = array![0.0, 0.0];
        let w = idw_weights(o.view(), [array![1.0, 0.0].view(), array![0.0, 2.0].view(), array![-4.0, 0.0].view()], 30.0);
        for (g, e) in w.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!((g - e).abs() < 1e-12);
        }
        let w = idw_weights(o.view(), [o.view(), array![30.0, 0.0].view(), array![0.0, 30.0].view()], 30.0);
        for g in w {
            assert!((g - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixup_swap_of_two() {
        let set = toy_set(2, 3, 0);
        // find a seed whose permutation swaps the pair
        let (batch, _) = (0..64)
            .map(|s| (make_batch_mixup(&set, &[0, 1], 0.5, s, 0).unwrap(), s))
            .find(|(b, _)| b.sources[0] == Sources::Pair(0, 1))
            .unwrap();
        assert_eq!(batch.sources[1], Sources::Pair(1, 0));
        assert!(make_batch_mixup(&set, &[0], 0.5, 0, 0).is_err());
    }

    #[test]
    fn icm_guard_clause() {
        let set = toy_set(6, 3, 1).with_clusters(vec![0, 0, 0, 0, 0, 1]).unwrap();
        let idx: Vec<usize> = (0..6).collect();
        let b = make_batch_icm(&set, &idx, 0.4, 3, 0).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.sources.iter().all(|s| s.indices().iter().all(|&i| i < 5)));
        assert!(b.sources.iter().all(|s| matches!(s, Sources::Pair(i, j) if i != j)));
        let singles = toy_set(3, 3, 1).with_clusters(vec![0, 1, 2]).unwrap();
        assert!(make_batch_icm(&singles, &[0, 1, 2], 0.4, 3, 0).unwrap().is_empty());
        assert!(matches!(make_batch_icm(&toy_set(3, 3, 1), &[0, 1], 0.4, 0, 0), Err(Error::MissingClusters(_))));
    }

    #[test]
    fn micm_identical_sources_give_uniform_idw() {
        let x = Array2::from_elem((3, 2), 0.25);
        let set = LabeledSet::new(FeatureMatrix::new(x).unwrap(), ComplementaryLabels::new(vec![0, 1, 2], 4).unwrap())
            .unwrap()
            .with_clusters(vec![7, 7, 7])
            .unwrap();
        let b = make_batch_micm(&set, &[0, 1, 2], 0.3, 30.0, 0, 0).unwrap();
        assert_eq!(b.len(), 3);
        for l in &b.labels {
            for k in 0..3 {
                assert!((l.weights()[k] - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn policies_are_deterministic() {
        let set = toy_set(40, 4, 2).with_clusters((0..40).map(|i| i % 3).collect()).unwrap();
        let idx: Vec<usize> = (0..40).rev().collect();
        for kind in [MixKind::Mixup, MixKind::Icm, MixKind::Micm, MixKind::MixupNf, MixKind::IntraClassNf, MixKind::ExtraClassNf] {
            let p = MixPolicy::new(kind, 0.4, 30.0).unwrap();
            let a = p.generate(&set, &idx, 5, 2).unwrap();
            let b = p.generate(&set, &idx, 5, 2).unwrap();
            assert_eq!(a.inputs, b.inputs);
            assert_eq!(a.sources, b.sources);
        }
        assert!(MixPolicy::new(MixKind::Micm, 0.4, 0.0).is_err());
        assert!(MixPolicy::new(MixKind::Mixup, 0.0, 30.0).is_err());
    }
}
