//! Complementary-label losses over softmax outputs, their soft-label
//! extensions, and analytic logit gradients.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::data::config::LossName;
use crate::labelgen::TransitionMatrix;
use crate::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1e-6;
/// Floor applied to the forward-corrected probability before the log.
pub const FWD_EPS: f64 = 1e-12;

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|&v| v - lse).collect()
}

/// Ordinary cross entropy −log p_y.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    -log_softmax(z)[y]
}

/// Σ_k t_k (−log p_k).
pub fn soft_cross_entropy(z: &[f64], target: &[f64]) -> f64 {
    log_softmax(z).iter().zip(target).map(|(l, t)| -l * t).sum()
}

/// ∂CE/∂z for a soft target: p·Σt − t.
pub fn soft_cross_entropy_grad(z: &[f64], target: &[f64]) -> Vec<f64> {
    let p = softmax(z);
    let mass: f64 = target.iter().sum();
    p.iter().zip(target).map(|(p, t)| p * mass - t).collect()
}

pub fn cross_entropy_grad(z: &[f64], y: usize) -> Vec<f64> {
    let mut g = softmax(z);
    g[y] -= 1.0;
    g
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

/// −log(1 − p_ȳ + γ).
pub fn scl_nl(ybar: usize, p: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(-(1.0 - p[ybar] + gamma).ln())
}

/// exp(p_ȳ).
pub fn scl_exp(ybar: usize, p: &[f64]) -> f64 {
    p[ybar].exp()
}

/// −log (Tᵀp)_ȳ, with the argument clamped at 1e−12.
pub fn fwd(ybar: usize, p: &[f64], t: &TransitionMatrix) -> f64 {
    let q: f64 = (0..p.len()).map(|r| t.get(r, ybar) * p[r]).sum();
    -q.max(FWD_EPS).ln()
}

/// True when the FWD argument for `ybar` falls below the clamp.
pub fn fwd_clamped(ybar: usize, p: &[f64], t: &TransitionMatrix) -> bool {
    let q: f64 = (0..p.len()).map(|r| t.get(r, ybar) * p[r]).sum();
    q < FWD_EPS
}

/// Loss kind together with its parameters.
pub type LossSpec = CllLoss;

/// A complementary-label loss ℓ(p, k) where k is a label the sample is not.
#[derive(Debug, Clone, PartialEq)]
pub enum CllLoss {
    SclNl { gamma: f64 },
    SclExp,
    Fwd { transition: TransitionMatrix },
}

impl CllLoss {
    pub fn scl_nl() -> Self {
        CllLoss::SclNl { gamma: DEFAULT_GAMMA }
    }

    /// Builds the loss named in a config; FWD needs the transition matrix used
    /// to draw the complementary labels.
    pub fn from_name(name: LossName, gamma: f64, transition: Option<&TransitionMatrix>) -> Result<Self> {
        Ok(match name {
            LossName::SclNl => {
                check_gamma(gamma)?;
                CllLoss::SclNl { gamma }
            }
            LossName::SclExp => CllLoss::SclExp,
            LossName::Fwd => CllLoss::Fwd {
                transition: transition
                    .cloned()
                    .ok_or_else(|| Error::Config("fwd loss needs a transition matrix".into()))?,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CllLoss::SclNl { .. } => "scl-nl",
            CllLoss::SclExp => "scl-exp",
            CllLoss::Fwd { .. } => "fwd",
        }
    }

    fn forward_probs(t: &TransitionMatrix, p: &[f64]) -> Vec<f64> {
        let k = p.len();
        (0..k).map(|c| (0..k).map(|r| t.get(r, c) * p[r]).sum()).collect()
    }

    /// Σ_k w_k ℓ(p, k) given probabilities.
    pub fn soft_from_probs(&self, p: &[f64], weights: &[f64]) -> f64 {
        match self {
            CllLoss::SclNl { gamma } => weights
                .iter()
                .zip(p)
                .filter(|(w, _)| **w != 0.0)
                .map(|(w, p)| -w * (1.0 - p + gamma).ln())
                .sum(),
            CllLoss::SclExp => weights
                .iter()
                .zip(p)
                .filter(|(w, _)| **w != 0.0)
                .map(|(w, p)| w * p.exp())
                .sum(),
            CllLoss::Fwd { transition } => {
                let q = Self::forward_probs(transition, p);
                weights
                    .iter()
                    .zip(&q)
                    .filter(|(w, _)| **w != 0.0)
                    .map(|(w, q)| -w * q.max(FWD_EPS).ln())
                    .sum()
            }
        }
    }

    /// ∂/∂p of Σ_k w_k ℓ(p, k).
    fn prob_grad(&self, p: &[f64], weights: &[f64]) -> Vec<f64> {
        match self {
            CllLoss::SclNl { gamma } => weights
                .iter()
                .zip(p)
                .map(|(w, p)| w / (1.0 - p + gamma))
                .collect(),
            CllLoss::SclExp => weights.iter().zip(p).map(|(w, p)| w * p.exp()).collect(),
            CllLoss::Fwd { transition } => {
                let q = Self::forward_probs(transition, p);
                let k = p.len();
                (0..k)
                    .map(|r| {
                        -(0..k)
                            .filter(|&c| weights[c] != 0.0 && q[c] >= FWD_EPS)
                            .map(|c| weights[c] * transition.get(r, c) / q[c])
                            .sum::<f64>()
                    })
                    .collect()
            }
        }
    }

    pub fn hard(&self, z: &[f64], ybar: usize) -> f64 {
        let mut w = vec![0.0; z.len()];
        w[ybar] = 1.0;
        self.soft(z, &w)
    }

    pub fn soft(&self, z: &[f64], weights: &[f64]) -> f64 {
        self.soft_from_probs(&softmax(z), weights)
    }

    /// Loss and ∂/∂z via the softmax Jacobian: p ⊙ (g − ⟨g, p⟩).
    pub fn soft_with_grad(&self, z: &[f64], weights: &[f64]) -> (f64, Vec<f64>) {
        let p = softmax(z);
        let loss = self.soft_from_probs(&p, weights);
        let g = self.prob_grad(&p, weights);
        let inner: f64 = g.iter().zip(&p).map(|(g, p)| g * p).sum();
        (loss, p.iter().zip(&g).map(|(p, g)| p * (g - inner)).collect())
    }

    pub fn hard_grad(&self, z: &[f64], ybar: usize) -> Vec<f64> {
        let mut w = vec![0.0; z.len()];
        w[ybar] = 1.0;
        self.soft_with_grad(z, &w).1
    }

    /// Mean soft loss over a batch and its gradient w.r.t. the logits
    /// (already divided by the batch size).
    pub fn batch(&self, logits: ArrayView2<'_, f64>, weights: ArrayView2<'_, f64>) -> Result<(f64, Array2<f64>)> {
        if logits.dim() != weights.dim() {
            return Err(Error::Shape(format!(
                "logits {:?} vs soft labels {:?}",
                logits.dim(),
                weights.dim()
            )));
        }
        let b = logits.nrows().max(1) as f64;
        let mut grad = Array2::zeros(logits.dim());
        let mut total = 0.0;
        for (i, (z, w)) in logits.rows().into_iter().zip(weights.rows()).enumerate() {
            let (loss, g) = self.soft_with_grad(&row_vec(z), &row_vec(w));
            total += loss;
            for (dst, v) in grad.row_mut(i).iter_mut().zip(g) {
                *dst = v / b;
            }
        }
        let mean = total / b;
        if !mean.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{} loss is not finite", self.name())));
        }
        Ok((mean, grad))
    }
}

fn row_vec(r: ArrayView1<'_, f64>) -> Vec<f64> {
    r.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelgen::{biased_transition, uniform_transition};

    fn numeric_grad(f: impl Fn(&[f64]) -> f64, z: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..z.len())
            .map(|i| {
                let mut a = z.to_vec();
                let mut b = z.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn free_functions_match_hard_losses() {
        let z = [0.3, -1.2, 2.0, 0.1];
        let p = softmax(&z);
        let t = biased_transition(4, 10.0).unwrap();
        for ybar in 0..4 {
            assert_eq!(scl_nl(ybar, &p, 1e-6).unwrap(), CllLoss::scl_nl().hard(&z, ybar));
            assert_eq!(scl_exp(ybar, &p), CllLoss::SclExp.hard(&z, ybar));
            let via_enum = CllLoss::Fwd { transition: t.clone() }.hard(&z, ybar);
            assert!((fwd(ybar, &p, &t) - via_enum).abs() < 1e-15);
            assert!(!fwd_clamped(ybar, &p, &t));
        }
        assert!(scl_nl(0, &p, 0.0).is_err());
        assert!(scl_nl(0, &p, 1.0).is_err());
        assert!(CllLoss::from_name(LossName::SclNl, 1.5, None).is_err());
        let one_hot = [1.0, 0.0, 0.0, 0.0];
        assert!(fwd_clamped(0, &one_hot, &uniform_transition(4).unwrap()));
        assert_eq!(fwd(0, &one_hot, &uniform_transition(4).unwrap()), -(1e-12f64).ln());
    }

    #[test]
    fn uniform_logits_closed_forms() {
        let z = vec![0.0; 10];
        let nl = CllLoss::SclNl { gamma: 0.0 };
        assert!((nl.hard(&z, 3) - (10.0f64 / 9.0).ln()).abs() < 1e-12);
        assert!((CllLoss::SclExp.hard(&z, 3) - 0.1f64.exp()).abs() < 1e-12);
        let fwd = CllLoss::Fwd {
            transition: uniform_transition(10).unwrap(),
        };
        assert!((fwd.hard(&z, 3) - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_reaches_gamma_floor() {
        let mut z = vec![-1000.0; 4];
        z[2] = 1000.0;
        let nl = CllLoss::scl_nl();
        assert!((nl.hard(&z, 2) + DEFAULT_GAMMA.ln()).abs() < 1e-6);
        assert!(nl.hard(&z, 2).is_finite());
    }

    #[test]
    fn one_hot_soft_equals_hard() {
        let z = [0.3, -1.2, 2.0, 0.1, 0.7];
        let t = biased_transition(5, 4.0).unwrap();
        for loss in [CllLoss::scl_nl(), CllLoss::SclExp, CllLoss::Fwd { transition: t }] {
            for k in 0..5 {
                let mut w = vec![0.0; 5];
                w[k] = 1.0;
                assert_eq!(loss.soft(&z, &w), loss.hard(&z, k));
            }
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let z = [0.3, -1.2, 2.0, 0.1, 0.7];
        let w = [0.0, 0.25, 0.5, 0.0, 0.25];
        let t = biased_transition(5, 3.0).unwrap();
        for loss in [CllLoss::scl_nl(), CllLoss::SclExp, CllLoss::Fwd { transition: t }] {
            let (_, g) = loss.soft_with_grad(&z, &w);
            let num = numeric_grad(|zz| loss.soft(zz, &w), &z);
            for (a, b) in g.iter().zip(&num) {
                assert!((a - b).abs() < 1e-6, "{}: {a} vs {b}", loss.name());
            }
        }
        let ce = numeric_grad(|zz| cross_entropy(zz, 2), &z);
        for (a, b) in cross_entropy_grad(&z, 2).iter().zip(&ce) {
            assert!((a - b).abs() < 1e-6);
        }
        let target = [0.1, 0.2, 0.3, 0.4, 0.0];
        let sce = numeric_grad(|zz| soft_cross_entropy(zz, &target), &z);
        for (a, b) in soft_cross_entropy_grad(&z, &target).iter().zip(&sce) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn batch_mean_and_shape_check() {
        let logits = ndarray::array![[0.0, 1.0, 2.0], [2.0, 1.0, 0.0]];
        let w = ndarray::array![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let (loss, g) = CllLoss::SclExp.batch(logits.view(), w.view()).unwrap();
        let expect = 0.5 * (CllLoss::SclExp.hard(&[0.0, 1.0, 2.0], 0) + CllLoss::SclExp.hard(&[2.0, 1.0, 0.0], 2));
        assert!((loss - expect).abs() < 1e-12);
        assert_eq!(g.dim(), (2, 3));
        let bad = ndarray::array![[1.0, 0.0]];
        assert!(CllLoss::SclExp.batch(logits.view(), bad.view()).is_err());
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1000.0, 1001.0, 999.0]);
        let b = softmax(&[0.0, 1.0, -1.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
