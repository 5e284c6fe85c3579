use ndarray::{Array2, ArrayView2};

use crate::augment::MixPolicy;
use crate::data::config::OptimizerName;
use crate::data::LabeledSet;
use crate::losses::{cross_entropy_grad, CllLoss};
use crate::model::{Mlp, OptimizerState};
use crate::rng::{domain, stream};
use crate::{Error, Result};

/// Which labels the reference gradient b averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BReference {
    /// y' ∈ [K] \ {y}: b is the mean of c over the complementary-label law.
    #[default]
    NotOrdinary,
    /// y' ≠ ȳ, the alternative reading.
    NotComplementary,
}

/// How the complementary gradient c is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Every ȳ ∈ [K] \ {y} enumerated with equal weight.
    Exhaustive,
    /// The dataset's own complementary label.
    Sampled,
    /// Synthetic rows from a mixing policy; f is the ordinary gradient at each
    /// row's first source, c and b are taken at the synthetic input.
    Policy(MixPolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradAnalysisConfig {
    pub estimator: Estimator,
    pub reference: BReference,
    pub subsample: usize,
    pub lr: f64,
    /// Minibatch size used when the policy synthesizes rows.
    pub batch_size: usize,
    pub seed: u64,
}

impl GradAnalysisConfig {
    pub fn new(estimator: Estimator, seed: u64) -> Self {
        Self {
            estimator,
            reference: BReference::NotOrdinary,
            subsample: 2000,
            lr: 1e-4,
            batch_size: 512,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradStats {
    pub epoch: usize,
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
}

fn one_hot_grad(loss: &CllLoss, z: &[f64], k: usize) -> Vec<f64> {
    loss.hard_grad(z, k)
}

/// Mean of ∂ℓ(y')/∂z over the reference set.
fn reference_grad(loss: &CllLoss, z: &[f64], y: usize, ybar: usize, reference: BReference) -> Vec<f64> {
    let k = z.len();
    let excluded = match reference {
        BReference::NotOrdinary => y,
        BReference::NotComplementary => ybar,
    };
    let mut w = vec![1.0 / (k - 1) as f64; k];
    w[excluded] = 0.0;
    loss.soft_with_grad(z, &w).1
}

/// Flat parameter gradients (f, c, b) at one instance: f of cross entropy at
/// y, c of the complementary loss at ȳ, b averaged per `reference`.
pub fn gradient_triplet(
    model: &Mlp,
    x: &[f64],
    y: usize,
    ybar: usize,
    loss: &CllLoss,
    reference: BReference,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let k = model.num_classes();
    if y >= k || ybar >= k || y == ybar {
        return Err(Error::InvalidParameter(format!("labels y={y}, ȳ={ybar} for {k} classes")));
    }
    let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Shape(e.to_string()))?;
    let pass = model.forward(xv)?;
    let z: Vec<f64> = pass.logits.row(0).to_vec();
    let grad_of = |g: Vec<f64>| {
        let d = Array2::from_shape_vec((1, k), g).expect("k entries");
        model.backward(xv, &pass, d.view())
    };
    Ok((
        grad_of(cross_entropy_grad(&z, y)),
        grad_of(one_hot_grad(loss, &z, ybar)),
        grad_of(reference_grad(loss, &z, y, ybar, reference)),
    ))
}

/// Accumulates ‖J·(u − v)‖² for logit-space vectors without materializing J.
struct Accumulator {
    mse: f64,
    bias: f64,
    var: f64,
    weight: f64,
}

impl Accumulator {
    fn add(&mut self, model: &Mlp, x: ArrayView2<'_, f64>, pass: &crate::model::ForwardPass, f: &Array2<f64>, c: &Array2<f64>, b: &Array2<f64>, w: f64) {
        let sum = |d: Array2<f64>| model.per_sample_sq_norms(x, pass, d.view()).iter().sum::<f64>();
        self.mse += w * sum(f - c);
        self.bias += w * sum(f - b);
        self.var += w * sum(b - c);
        self.weight += w * x.nrows() as f64;
    }

    fn stats(&self, epoch: usize) -> GradStats {
        let n = self.weight.max(f64::MIN_POSITIVE);
        GradStats {
            epoch,
            mse: self.mse / n,
            bias_sq: self.bias / n,
            variance: self.var / n,
        }
    }
}

fn rows_of(k: usize, n: usize, mut fill: impl FnMut(usize) -> Vec<f64>) -> Array2<f64> {
    let mut m = Array2::zeros((n, k));
    for r in 0..n {
        for (dst, v) in m.row_mut(r).iter_mut().zip(fill(r)) {
            *dst = v;
        }
    }
    m
}

/// The fixed, seeded subsample analysed every epoch.
fn analysis_indices(set: &LabeledSet, cfg: &GradAnalysisConfig) -> Vec<usize> {
    let n = set.len();
    if cfg.subsample >= n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(&mut stream(cfg.seed, &[domain::GRAD, 0]), n, cfg.subsample).into_vec();
    idx.sort_unstable();
    idx
}

/// One protocol epoch: MSE, bias² and variance of the complementary gradient
/// against the ordinary one, then one SGD step on the mean ordinary gradient.
pub fn bias_variance_epoch(
    model: &mut Mlp,
    set: &LabeledSet,
    loss: &CllLoss,
    cfg: &GradAnalysisConfig,
    epoch: usize,
) -> Result<GradStats> {
    let y = set.ordinary.as_ref().ok_or(Error::MissingOracle("gradient analysis"))?.as_slice();
    if let Estimator::Policy(p) = cfg.estimator {
        if p.kind.needs_clusters() && set.clusters.is_none() {
            return Err(Error::MissingClusters("gradient analysis"));
        }
    }
    let yb = set.complementary.as_slice();
    let k = model.num_classes();
    let idx = analysis_indices(set, cfg);
    let x = set.features.view().select(ndarray::Axis(0), &idx);
    let mut acc = Accumulator {
        mse: 0.0,
        bias: 0.0,
        var: 0.0,
        weight: 0.0,
    };

    match cfg.estimator {
        Estimator::Exhaustive | Estimator::Sampled => {
            let pass = model.forward(x.view())?;
            let z = |r: usize| pass.logits.row(r).to_vec();
            let f = rows_of(k, idx.len(), |r| cross_entropy_grad(&z(r), y[idx[r]]));
            let labels: Vec<Vec<usize>> = match cfg.estimator {
                Estimator::Sampled => vec![idx.iter().map(|&i| yb[i]).collect()],
                _ => (1..k).map(|shift| idx.iter().map(|&i| (y[i] + shift) % k).collect()).collect(),
            };
            let w = 1.0 / labels.len() as f64;
            for ybar in &labels {
                let c = rows_of(k, idx.len(), |r| one_hot_grad(loss, &z(r), ybar[r]));
                let b = rows_of(k, idx.len(), |r| reference_grad(loss, &z(r), y[idx[r]], ybar[r], cfg.reference));
                acc.add(model, x.view(), &pass, &f, &c, &b, w);
            }
        }
        Estimator::Policy(policy) => {
            for (b, chunk) in idx.chunks(cfg.batch_size.max(2)).enumerate() {
                if chunk.len() < 2 {
                    continue;
                }
                let batch = policy.generate(set, chunk, cfg.seed, (epoch * idx.len() + b) as u64)?;
                if batch.is_empty() {
                    continue;
                }
                let anchors: Vec<usize> = batch.sources.iter().map(|s| s.indices()[0]).collect();
                let xa = set.features.view().select(ndarray::Axis(0), &anchors);
                let pass_a = model.forward(xa.view())?;
                let pass = model.forward(batch.inputs.view())?;
                let z = |r: usize| pass.logits.row(r).to_vec();
                let f = rows_of(k, batch.len(), |r| cross_entropy_grad(&pass_a.logits.row(r).to_vec(), y[anchors[r]]));
                let c = rows_of(k, batch.len(), |r| loss.soft_with_grad(&z(r), batch.labels[r].weights()).1);
                let bm = rows_of(k, batch.len(), |r| {
                    let mut w = vec![0.0; k];
                    for (&i, &coeff) in batch.sources[r].indices().iter().zip(&batch.label_coeffs[r]) {
                        let excluded = match cfg.reference {
                            BReference::NotOrdinary => y[i],
                            BReference::NotComplementary => yb[i],
                        };
                        for (kk, wk) in w.iter_mut().enumerate() {
                            if kk != excluded {
                                *wk += coeff / (k - 1) as f64;
                            }
                        }
                    }
                    loss.soft_with_grad(&z(r), &w).1
                });
                let xs = batch.inputs.view();
                let total = |v: Vec<f64>| v.iter().sum::<f64>();
                let ff = total(model.per_sample_sq_norms(xa.view(), &pass_a, f.view()));
                let cc = total(model.per_sample_sq_norms(xs, &pass, c.view()));
                let bb = total(model.per_sample_sq_norms(xs, &pass, bm.view()));
                let fc = total(model.per_sample_dots(xa.view(), &pass_a, f.view(), xs, &pass, c.view()));
                let fb = total(model.per_sample_dots(xa.view(), &pass_a, f.view(), xs, &pass, bm.view()));
                acc.mse += ff + cc - 2.0 * fc;
                acc.bias += ff + bb - 2.0 * fb;
                acc.var += total(model.per_sample_sq_norms(xs, &pass, (&bm - &c).view()));
                acc.weight += batch.len() as f64;
            }
        }
    }
    let stats = acc.stats(epoch);

    // ordinary-gradient update on the same subsample
    let pass = model.forward(x.view())?;
    let n = idx.len() as f64;
    let d = rows_of(k, idx.len(), |r| {
        cross_entropy_grad(&pass.logits.row(r).to_vec(), y[idx[r]]).into_iter().map(|v| v / n).collect()
    });
    let grad = model.backward(x.view(), &pass, d.view());
    OptimizerState::new(OptimizerName::Sgd, 0).step(model.params_mut(), &grad, cfg.lr, 0.0);
    if model.params().iter().any(|p| !p.is_finite()) || !(stats.mse.is_finite()) {
        return Err(Error::Numeric("gradient analysis diverged".into()));
    }
    Ok(stats)
}

/// Runs the protocol for `epochs` epochs from `model`.
pub fn gradient_analysis(
    model: &Mlp,
    set: &LabeledSet,
    loss: &CllLoss,
    cfg: &GradAnalysisConfig,
    epochs: usize,
) -> Result<Vec<GradStats>> {
    let mut m = model.clone();
    (0..epochs).map(|e| bias_variance_epoch(&mut m, set, loss, cfg, e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::MixKind;
    use crate::data::{FeatureMatrix, OrdinaryLabels};
    use crate::labelgen::{sample_complementary, uniform_transition};
    use rand::Rng;

    fn toy(n: usize, k: usize, seed: u64) -> LabeledSet {
        let mut rng = stream(seed, &[0]);
        let x = Array2::from_shape_simple_fn((n, 4), || rng.random::<f64>());
        let y = OrdinaryLabels::new((0..n).map(|i| i % k).collect(), k).unwrap();
        let yb = sample_complementary(&y, &uniform_transition(k).unwrap(), seed).unwrap();
        LabeledSet::new(FeatureMatrix::new(x).unwrap(), yb).unwrap().with_ordinary(y).unwrap()
    }

    fn sq(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn three_class_b_is_two_term_mean() {
        let m = Mlp::init(&[4, 5, 3], 1).unwrap();
        let x = [0.1, 0.5, 0.3, 0.9];
        let loss = CllLoss::scl_nl();
        let (_, c1, b) = gradient_triplet(&m, &x, 0, 1, &loss, BReference::NotOrdinary).unwrap();
        let (_, c2, _) = gradient_triplet(&m, &x, 0, 2, &loss, BReference::NotOrdinary).unwrap();
        for ((a, c), bb) in c1.iter().zip(&c2).zip(&b) {
            assert!((0.5 * (a + c) - bb).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_model_f_closed_form() {
        let m = Mlp::init(&[4, 3], 2).unwrap();
        let x = [0.1, 0.5, 0.3, 0.9];
        let (f, _, _) = gradient_triplet(&m, &x, 2, 0, &CllLoss::SclExp, BReference::NotOrdinary).unwrap();
        let z = m.logits(ArrayView2::from_shape((1, 4), &x[..]).unwrap()).unwrap();
        let p = crate::losses::softmax(&z.row(0).to_vec());
        for i in 0..4 {
            for k in 0..3 {
                let expect = x[i] * (p[k] - if k == 2 { 1.0 } else { 0.0 });
                assert!((f[i * 3 + k] - expect).abs() < 1e-12);
            }
        }
        for k in 0..3 {
            assert!((f[12 + k] - (p[k] - if k == 2 { 1.0 } else { 0.0 })).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_epoch_matches_explicit_vectors_and_decomposes() {
        let set = toy(30, 4, 3);
        let model = Mlp::init(&[4, 6, 4], 5).unwrap();
        let loss = CllLoss::scl_nl();
        let cfg = GradAnalysisConfig::new(Estimator::Exhaustive, 0);
        let mut m = model.clone();
        let stats = bias_variance_epoch(&mut m, &set, &loss, &cfg, 0).unwrap();
        assert!(((stats.bias_sq + stats.variance) - stats.mse).abs() <= 1e-8 * stats.mse);

        // explicit oracle from flattened gradients
        let y = set.ordinary.as_ref().unwrap().as_slice();
        let (mut mse, mut bias, mut var) = (0.0, 0.0, 0.0);
        for i in 0..30 {
            let xi: Vec<f64> = set.features.row(i).to_vec();
            for yb in (0..4).filter(|&c| c != y[i]) {
                let (f, c, b) = gradient_triplet(&model, &xi, y[i], yb, &loss, BReference::NotOrdinary).unwrap();
                mse += sq(&f, &c) / 3.0;
                bias += sq(&f, &b) / 3.0;
                var += sq(&b, &c) / 3.0;
            }
        }
        assert!((stats.mse - mse / 30.0).abs() < 1e-10 * mse);
        assert!((stats.bias_sq - bias / 30.0).abs() < 1e-10 * bias);
        assert!((stats.variance - var / 30.0).abs() < 1e-10 * var);
        assert_ne!(m, model, "ordinary step applied");
    }

    #[test]
    fn policy_estimators_run() {
        let set = toy(60, 3, 4).with_clusters((0..60).map(|i| i % 3).collect()).unwrap();
        let model = Mlp::init(&[4, 3], 0).unwrap();
        for kind in [MixKind::Mixup, MixKind::Icm, MixKind::IntraClassNf] {
            let p = MixPolicy::new(kind, 0.4, 30.0).unwrap();
            let cfg = GradAnalysisConfig::new(Estimator::Policy(p), 1);
            let s = gradient_analysis(&model, &set, &CllLoss::scl_nl(), &cfg, 2).unwrap();
            assert_eq!(s.len(), 2);
            assert!(s.iter().all(|g| g.mse.is_finite() && g.mse >= 0.0));
        }
        let unclustered = toy(10, 3, 1);
        let cfg = GradAnalysisConfig::new(Estimator::Policy(MixPolicy::new(MixKind::Icm, 0.4, 30.0).unwrap()), 1);
        assert!(matches!(
            gradient_analysis(&model, &unclustered, &CllLoss::scl_nl(), &cfg, 1),
            Err(Error::MissingClusters(_))
        ));
    }
}
