use rand::seq::SliceRandom;

use crate::augment::{is_noisy, MixPolicy};
use crate::data::LabeledSet;
use crate::rng::{domain, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassNoise {
    pub class: usize,
    pub tuples: usize,
    pub noisy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub policy: &'static str,
    pub tuples: usize,
    pub noise_ratio: f64,
    /// Tuples grouped by the ordinary class of their first source.
    pub per_class: Vec<ClassNoise>,
}

/// Runs `trials` passes over the set in shuffled minibatches and aggregates the
/// noise ratio of every synthesized tuple.
pub fn noise_report(policy: &MixPolicy, set: &LabeledSet, trials: usize, batch_size: usize, seed: u64) -> Result<NoiseReport> {
    let y = set.ordinary.as_ref().ok_or(Error::MissingOracle("noise report"))?.as_slice();
    if batch_size < 2 {
        return Err(Error::InvalidParameter(format!("batch size {batch_size} below 2")));
    }
    let yb = set.complementary.as_slice();
    let k = set.num_classes();
    let mut per_class: Vec<ClassNoise> = (0..k).map(|class| ClassNoise { class, tuples: 0, noisy: 0 }).collect();
    for trial in 0..trials {
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut stream(seed, &[domain::NOISE, trial as u64]));
        let chunks = order.len().div_ceil(batch_size);
        for (b, chunk) in order.chunks(batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let batch = policy.generate(set, chunk, seed, (trial * chunks + b) as u64)?;
            for src in &batch.sources {
                let entry = &mut per_class[y[src.indices()[0]]];
                entry.tuples += 1;
                entry.noisy += usize::from(is_noisy(src, y, yb));
            }
        }
    }
    let tuples: usize = per_class.iter().map(|c| c.tuples).sum();
    let noisy: usize = per_class.iter().map(|c| c.noisy).sum();
    Ok(NoiseReport {
        policy: policy.kind.name(),
        tuples,
        noise_ratio: if tuples == 0 { 0.0 } else { noisy as f64 / tuples as f64 },
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::MixKind;
    use crate::data::{FeatureMatrix, OrdinaryLabels};
    use crate::labelgen::{sample_complementary, uniform_transition};
    use ndarray::Array2;

    #[test]
    fn filtered_policy_reports_zero() {
        let n = 500;
        let x = FeatureMatrix::new(Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 10.0)).unwrap();
        let y = OrdinaryLabels::new((0..n).map(|i| i % 5).collect(), 5).unwrap();
        let yb = sample_complementary(&y, &uniform_transition(5).unwrap(), 1).unwrap();
        let set = LabeledSet::new(x, yb).unwrap().with_ordinary(y).unwrap();
        let nf = MixPolicy::new(MixKind::MixupNf, 1.0, 30.0).unwrap();
        let r = noise_report(&nf, &set, 3, 64, 0).unwrap();
        assert_eq!(r.noise_ratio, 0.0);
        assert!(r.tuples > 0);
        let mix = MixPolicy::new(MixKind::Mixup, 1.0, 30.0).unwrap();
        let r = noise_report(&mix, &set, 3, 64, 0).unwrap();
        assert_eq!(r.tuples, 1500);
        assert_eq!(r.per_class.iter().map(|c| c.tuples).sum::<usize>(), 1500);
        assert!(r.noise_ratio > 0.2 && r.noise_ratio < 0.5);
    }
}
