//! Complementary risks, the Mixup error decomposition, gradient bias/variance
//! analysis and noise reports.

mod grad;
mod report;

pub use grad::{
    bias_variance_epoch, gradient_analysis, gradient_triplet, BReference, Estimator, GradAnalysisConfig, GradStats,
};
pub use report::{noise_report, ClassNoise, NoiseReport};

use crate::augment::{Sources, SyntheticBatch};
use crate::data::LabeledSet;
use crate::model::{predict, Mlp};
use crate::{Error, Result};

fn predictions(model: &Mlp, x: ndarray::ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    Ok(predict(model.logits(x)?.view()))
}

/// Fraction of instances whose prediction differs from the complementary label.
pub fn risk_hard(model: &Mlp, set: &LabeledSet) -> Result<f64> {
    Ok(1.0 - epsilon_error(model, set)?)
}

/// Fraction of instances whose prediction equals the complementary label.
pub fn epsilon_error(model: &Mlp, set: &LabeledSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidData("empty set".into()));
    }
    let pred = predictions(model, set.features.view())?;
    let hits = pred.iter().zip(set.complementary.as_slice()).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / set.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskForm {
    /// Σ_s λ_s [ȳ_s ≠ g(x̃)].
    Weighted,
    /// Σ_s [ȳ_s ≠ g(x̃)].
    Unweighted,
}

fn check_sources(batch: &SyntheticBatch, set: &LabeledSet) -> Result<()> {
    match batch.sources.iter().flat_map(Sources::indices).find(|&i| i >= set.len()) {
        Some(i) => Err(Error::Shape(format!("source {i} outside the set"))),
        None => Ok(()),
    }
}

fn risk_from_predictions(batch: &SyntheticBatch, set: &LabeledSet, pred: &[usize], form: RiskForm) -> f64 {
    let yb = set.complementary.as_slice();
    let total: f64 = batch
        .sources
        .iter()
        .zip(&batch.label_coeffs)
        .zip(pred)
        .map(|((src, coeffs), &p)| {
            src.indices()
                .iter()
                .zip(coeffs)
                .filter(|(&i, _)| yb[i] != p)
                .map(|(_, &c)| if form == RiskForm::Weighted { c } else { 1.0 })
                .sum::<f64>()
        })
        .sum();
    total / batch.len() as f64
}

/// Soft complementary 0-1 risk of a synthetic batch.
pub fn risk_soft(model: &Mlp, batch: &SyntheticBatch, set: &LabeledSet, form: RiskForm) -> Result<f64> {
    check_sources(batch, set)?;
    if batch.is_empty() {
        return Ok(0.0);
    }
    let pred = predictions(model, batch.inputs.view())?;
    Ok(risk_from_predictions(batch, set, &pred, form))
}

/// Both sides of the Mixup error decomposition for one batch.
///
/// `total`, `non_noise_dense` and `noise_dense` are read off the soft-label
/// vectors: Σ_k ỹ_k([k ≠ g] + [k = g]), Σ_k ỹ_k[k ≠ g] and ỹ_g.
/// `non_noise` and `noise` are rebuilt from the sources and their
/// coefficients: Σ_s λ_s[ȳ_s ≠ g] and Σ_s λ_s ε_s with ε_s = [ȳ_s = g].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub total: f64,
    pub non_noise_dense: f64,
    pub noise_dense: f64,
    pub non_noise: f64,
    pub noise: f64,
}

impl Decomposition {
    /// |total − non_noise − noise|.
    pub fn residual(&self) -> f64 {
        (self.total - self.non_noise - self.noise).abs()
    }
}

/// Decomposition for arbitrary per-row predictions (model or oracle).
pub fn decompose_with_predictions(batch: &SyntheticBatch, set: &LabeledSet, pred: &[usize]) -> Result<Decomposition> {
    check_sources(batch, set)?;
    if pred.len() != batch.len() {
        return Err(Error::Shape(format!("{} predictions for {} rows", pred.len(), batch.len())));
    }
    let m = batch.len().max(1) as f64;
    let yb = set.complementary.as_slice();
    let mut d = Decomposition {
        total: 0.0,
        non_noise_dense: 0.0,
        noise_dense: 0.0,
        non_noise: 0.0,
        noise: 0.0,
    };
    for ((label, (src, coeffs)), &p) in batch.labels.iter().zip(batch.sources.iter().zip(&batch.label_coeffs)).zip(pred) {
        let w = label.weights();
        let miss: f64 = w.iter().enumerate().filter(|(k, _)| *k != p).map(|(_, v)| v).sum();
        d.total += miss + w[p];
        d.non_noise_dense += miss;
        d.noise_dense += w[p];
        for (&i, &c) in src.indices().iter().zip(coeffs) {
            if yb[i] == p {
                d.noise += c;
            } else {
                d.non_noise += c;
            }
        }
    }
    d.total /= m;
    d.non_noise_dense /= m;
    d.noise_dense /= m;
    d.non_noise /= m;
    d.noise /= m;
    Ok(d)
}

pub fn mixup_decomposition(model: &Mlp, batch: &SyntheticBatch, set: &LabeledSet) -> Result<Decomposition> {
    let pred = if batch.is_empty() { Vec::new() } else { predictions(model, batch.inputs.view())? };
    decompose_with_predictions(batch, set, &pred)
}

/// Predicts the ordinary label of the dominant source of every row.
pub fn oracle_predictions(batch: &SyntheticBatch, set: &LabeledSet) -> Result<Vec<usize>> {
    let y = set.ordinary.as_ref().ok_or(Error::MissingOracle("oracle predictions"))?.as_slice();
    Ok(batch
        .sources
        .iter()
        .zip(&batch.label_coeffs)
        .map(|(src, coeffs)| {
            let idx = src.indices();
            let best = coeffs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (s, &c)| if c > b.1 { (s, c) } else { b })
                .0;
            y[idx[best]]
        })
        .collect())
}
