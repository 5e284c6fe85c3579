//! Flat key-value experiment configuration (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossName {
    SclNl,
    SclExp,
    Fwd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    None,
    Mixup,
    Icm,
    Micm,
    MixupNf,
    IntraClassNf,
    ExtraClassNf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerName {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Idx,
    Cifar10,
    Cifar100,
}

/// Benchmarks with tuned mixing concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Cifar10,
    Cifar20,
    Mnist,
    Kmnist,
    Fmnist,
}

impl DatasetName {
    /// Tuned α for Beta(α, α) pair mixing.
    pub fn beta_alpha(self) -> f64 {
        match self {
            DatasetName::Cifar10 => 0.4,
            DatasetName::Cifar20 | DatasetName::Mnist | DatasetName::Fmnist => 0.1,
            DatasetName::Kmnist => 0.3,
        }
    }

    /// Tuned α for Dir(α, α, α) triple mixing.
    pub fn dirichlet_alpha(self) -> f64 {
        match self {
            DatasetName::Cifar10 => 0.2,
            DatasetName::Cifar20 | DatasetName::Fmnist => 0.4,
            DatasetName::Mnist => 0.1,
            DatasetName::Kmnist => 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: Option<DatasetName>,
    pub format: DataFormat,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub num_classes: Option<usize>,
    pub loss: LossName,
    pub policy: PolicyName,
    /// Mixing concentration; falls back to the dataset's tuned value.
    pub alpha: Option<f64>,
    pub clusters: usize,
    pub idw_c: f64,
    pub gamma: f64,
    pub setup: u8,
    pub rho_ord: f64,
    pub rho_trans: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerName,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    /// Fraction of the training file held out for evaluation when no test
    /// files are configured.
    pub holdout_fraction: f64,
    pub split_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            format: DataFormat::Idx,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            num_classes: None,
            loss: LossName::SclNl,
            policy: PolicyName::None,
            alpha: None,
            clusters: 50,
            idw_c: 30.0,
            gamma: 1e-6,
            setup: 1,
            rho_ord: 1.0,
            rho_trans: 1.0,
            batch_size: 512,
            epochs: 30,
            lr: 1e-4,
            weight_decay: 1e-4,
            optimizer: OptimizerName::Adam,
            seed: 0,
            hidden: vec![256],
            embed_dim: 64,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-4,
            holdout_fraction: 0.0,
            split_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Concentration actually used: explicit value, else the dataset's tuned
    /// Beta or Dirichlet α, else 1.
    pub fn resolved_alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| match (self.dataset, self.policy) {
            (Some(d), PolicyName::Micm) => d.dirichlet_alpha(),
            (Some(d), _) => d.beta_alpha(),
            (None, _) => 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.resolved_alpha() > 0.0) {
            return fail(format!("alpha must be > 0, got {}", self.resolved_alpha()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.rho_ord >= 1.0) || !(self.rho_trans >= 1.0) {
            return fail(format!(
                "imbalance ratios must be >= 1, got {} and {}",
                self.rho_ord, self.rho_trans
            ));
        }
        if self.clusters < 1 {
            return fail("clusters must be >= 1".into());
        }
        if !(self.idw_c > 0.0) {
            return fail(format!("idw_c must be > 0, got {}", self.idw_c));
        }
        if !(1..=3).contains(&self.setup) {
            return fail(format!("setup must be 1, 2 or 3, got {}", self.setup));
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1".into());
        }
        if !(self.lr >= 0.0) || !(self.weight_decay >= 0.0) {
            return fail("lr and weight_decay must be >= 0".into());
        }
        if self.num_classes.is_some_and(|k| k <= 2) {
            return fail("num_classes must be > 2".into());
        }
        if self.hidden.contains(&0) {
            return fail("hidden layer widths must be > 0".into());
        }
        if !(self.kmeans_tol >= 0.0) || self.kmeans_max_iter < 1 {
            return fail("kmeans_tol must be >= 0 and kmeans_max_iter >= 1".into());
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return fail(format!("holdout_fraction must lie in [0, 1), got {}", self.holdout_fraction));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_document() {
        let c = ExperimentConfig::from_toml_str(
            "dataset = \"mnist\"\nloss = \"fwd\"\npolicy = \"micm\"\nseed = 3\nhidden = [32]\n",
        )
        .unwrap();
        assert_eq!(c.loss, LossName::Fwd);
        assert_eq!(c.resolved_alpha(), 0.1);
        assert_eq!(c.idw_c, 30.0);
        assert_eq!(c.clusters, 50);
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        assert!(ExperimentConfig::from_toml_str("alpah = 0.3\n").is_err());
        assert!(ExperimentConfig::from_toml_str("gamma = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("rho_ord = 0.5\n").is_err());
        assert!(ExperimentConfig::from_toml_str("alpha = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("clusters = 0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("holdout_fraction = 1.0\n").is_err());
    }

    #[test]
    fn tuned_alphas() {
        use DatasetName::*;
        let beta: Vec<f64> = [Cifar10, Cifar20, Mnist, Kmnist, Fmnist]
            .iter()
            .map(|d| d.beta_alpha())
            .collect();
        let dir: Vec<f64> = [Cifar10, Cifar20, Mnist, Kmnist, Fmnist]
            .iter()
            .map(|d| d.dirichlet_alpha())
            .collect();
        assert_eq!(beta, vec![0.4, 0.1, 0.1, 0.3, 0.1]);
        assert_eq!(dir, vec![0.2, 0.4, 0.1, 0.3, 0.4]);
    }
}
