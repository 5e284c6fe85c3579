use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;

use super::{evaluate, Mlp, OptimizerState};
use crate::augment::{noise, MixPolicy};
use crate::data::config::{ExperimentConfig, OptimizerName};
use crate::data::{FeatureMatrix, LabeledSet, OrdinaryLabels};
use crate::losses::CllLoss;
use crate::rng::{domain, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerName,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::from(&ExperimentConfig::default())
    }
}

impl From<&ExperimentConfig> for TrainConfig {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            hidden: c.hidden.clone(),
            epochs: c.epochs,
            batch_size: c.batch_size,
            lr: c.lr,
            weight_decay: c.weight_decay,
            optimizer: c.optimizer,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss, weighted by synthetic rows.
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Present when oracle labels are attached to the training set.
    pub noise_ratio: Option<f64>,
    pub synthetic_rows: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Seconds per epoch; kept apart from `records`, which are reproducible.
    pub wall_seconds: Vec<f64>,
}

impl TrainHistory {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.test_accuracy)
    }
}

/// Minibatch training: seeded shuffle per epoch, optional augmentation of every
/// minibatch, mean soft loss, one optimizer step per minibatch.
pub fn train(
    cfg: &TrainConfig,
    set: &LabeledSet,
    policy: Option<&MixPolicy>,
    loss: &CllLoss,
    test: Option<(&FeatureMatrix, &OrdinaryLabels)>,
) -> Result<(Mlp, TrainHistory)> {
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidParameter("batch size and epochs must be positive".into()));
    }
    if !(cfg.lr > 0.0) || !(cfg.weight_decay >= 0.0) {
        return Err(Error::InvalidParameter(format!("lr {} / weight decay {}", cfg.lr, cfg.weight_decay)));
    }
    if set.is_empty() {
        return Err(Error::InvalidData("empty training set".into()));
    }
    if let Some(p) = policy {
        if p.kind.needs_clusters() && set.clusters.is_none() {
            return Err(Error::MissingClusters("cluster-based mixing"));
        }
        if p.kind.needs_oracle() && set.ordinary.is_none() {
            return Err(Error::MissingOracle("oracle-filtered mixing"));
        }
    }
    if let Some((x, y)) = test {
        if x.cols() != set.dim() || x.rows() != y.len() {
            return Err(Error::Shape("test set does not match the training set".into()));
        }
    }

    let k = set.num_classes();
    let mut dims = vec![set.dim()];
    dims.extend(&cfg.hidden);
    dims.push(k);
    let mut model = Mlp::init(&dims, cfg.seed)?;
    let mut opt = OptimizerState::new(cfg.optimizer, model.num_params());
    let ybar = set.complementary.as_slice();
    let oracle = set.ordinary.as_ref().map(|o| o.as_slice());
    let batches = set.len().div_ceil(cfg.batch_size);
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut stream(cfg.seed, &[domain::SHUFFLE, epoch as u64]));
        let (mut loss_sum, mut rows, mut noisy) = (0.0, 0usize, 0usize);
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let (inputs, soft, sources) = match policy {
                None => {
                    let mut soft = Array2::zeros((idx.len(), k));
                    for (r, &i) in idx.iter().enumerate() {
                        soft[[r, ybar[i]]] = 1.0;
                    }
                    (set.features.view().select(ndarray::Axis(0), idx), soft, None)
                }
                Some(p) => {
                    let batch = p.generate(set, idx, cfg.seed, (epoch * batches + b) as u64)?;
                    if batch.is_empty() {
                        continue;
                    }
                    let soft = batch.label_matrix(k);
                    (batch.inputs, soft, Some(batch.sources))
                }
            };
            let (value, grad) = model.loss_and_grad(inputs.view(), soft.view(), loss)?;
            opt.step(model.params_mut(), &grad, cfg.lr, cfg.weight_decay);
            loss_sum += value * inputs.nrows() as f64;
            rows += inputs.nrows();
            if let (Some(y), Some(src)) = (oracle, &sources) {
                noisy += src.iter().filter(|s| noise::is_noisy(s, y, ybar)).count();
            }
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("parameters diverged in epoch {epoch}")));
        }
        let test_accuracy = test.map(|(x, y)| evaluate(&model, x.view(), y.as_slice())).transpose()?;
        history.records.push(EpochRecord {
            epoch,
            train_loss: if rows > 0 { loss_sum / rows as f64 } else { 0.0 },
            test_accuracy,
            noise_ratio: match (policy, oracle) {
                (Some(_), Some(_)) if rows > 0 => Some(noisy as f64 / rows as f64),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            },
            synthetic_rows: rows,
        });
        history.wall_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::MixKind;
    use crate::labelgen::{sample_complementary, uniform_transition};
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> (LabeledSet, OrdinaryLabels) {
        let mut rng = stream(seed, &[0]);
        let centers = [[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]];
        let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| centers[y[i]][j] + rng.random_range(-0.05..0.05));
        let t = uniform_transition(3).unwrap();
        let ord = OrdinaryLabels::new(y, 3).unwrap();
        let yb = sample_complementary(&ord, &t, seed).unwrap();
        let set = LabeledSet::new(FeatureMatrix::new(x).unwrap(), yb)
            .unwrap()
            .with_ordinary(ord.clone())
            .unwrap();
        (set, ord)
    }

    #[test]
    fn plain_training_decreases_loss_and_is_reproducible() {
        let (set, ord) = separable(300, 1);
        let cfg = TrainConfig {
            hidden: vec![],
            epochs: 5,
            batch_size: 32,
            lr: 1e-2,
            weight_decay: 0.0,
            optimizer: OptimizerName::Adam,
            seed: 4,
        };
        let loss = CllLoss::scl_nl();
        let (m1, h1) = train(&cfg, &set, None, &loss, Some((&set.features, &ord))).unwrap();
        let (m2, h2) = train(&cfg, &set, None, &loss, Some((&set.features, &ord))).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1.records, h2.records);
        for w in h1.records.windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss);
        }
        assert!(h1.records.iter().all(|r| r.noise_ratio.is_none()));
    }

    #[test]
    fn icm_requires_clusters() {
        let (set, _) = separable(30, 2);
        let p = MixPolicy::new(MixKind::Icm, 0.4, 30.0).unwrap();
        let r = train(&TrainConfig::default(), &set, Some(&p), &CllLoss::SclExp, None);
        assert!(matches!(r, Err(Error::MissingClusters(_))));
    }

    #[test]
    fn mixup_records_noise_with_oracle() {
        let (set, _) = separable(64, 3);
        let cfg = TrainConfig {
            hidden: vec![4],
            epochs: 2,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let p = MixPolicy::new(MixKind::Mixup, 1.0, 30.0).unwrap();
        let (_, h) = train(&cfg, &set, Some(&p), &CllLoss::scl_nl(), None).unwrap();
        assert_eq!(h.records.len(), 2);
        assert!(h.records.iter().all(|r| r.noise_ratio.is_some() && r.synthetic_rows == 64));
    }
}
