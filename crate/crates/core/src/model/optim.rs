use crate::data::config::OptimizerName;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Optimizer with its moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerName,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerName, num_params: usize) -> Self {
        let buf = if kind == OptimizerName::Adam { num_params } else { 0 };
        Self {
            kind,
            m: vec![0.0; buf],
            v: vec![0.0; buf],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// SGD: θ ← θ − lr(g + wd·θ). Adam: decoupled decay θ ← θ(1 − lr·wd), then
    /// the bias-corrected moment update.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, weight_decay: f64) {
        assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
        self.t += 1;
        match self.kind {
            OptimizerName::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * (g + weight_decay * *p);
                }
            }
            OptimizerName::Adam => {
                let c1 = 1.0 - BETA1.powi(self.t as i32);
                let c2 = 1.0 - BETA2.powi(self.t as i32);
                for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * weight_decay * *p;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
                }
            }
        }
    }
}
