//! `cll`: reproducible complementary-label learning pipelines.

mod commands;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cll_core::data::config::{LossName, PolicyName};
use cll_core::data::ExperimentConfig;
use cll_core::ErrorKind;

#[derive(Debug)]
pub enum CliError {
    Core(cll_core::Error),
    Config(String),
    Data(String),
}

impl From<cll_core::Error> for CliError {
    fn from(e: cll_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cll", version, about = "Complementary-label learning toolkit")]
pub struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    Exhaustive,
    Sampled,
    Mixup,
    Icm,
    Micm,
    MixupNf,
    IntraClassNf,
    ExtraClassNf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReferenceArg {
    NotOrdinary,
    NotComplementary,
}

/// Overrides shared by the training-related subcommands.
#[derive(Debug, Clone, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub idw_c: Option<f64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize complementary labels under an imbalance setup.
    GenLabels {
        #[arg(long)]
        setup: Option<u8>,
        #[arg(long)]
        rho_ord: Option<f64>,
        #[arg(long)]
        rho_trans: Option<f64>,
    },
    /// PCA embeddings of the training instances, or validate an external file.
    Embed {
        /// Externally computed CLLEMB01 file used instead of PCA.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// k-means over the embeddings.
    Cluster {
        #[arg(long)]
        clusters: Option<usize>,
        /// Report cluster purity against the ordinary labels.
        #[arg(long)]
        oracle_labels: bool,
    },
    /// `embed` followed by `cluster`.
    EmbedCluster {
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        oracle_labels: bool,
    },
    /// Noise ratio, pair-class statistics and filter pass rates.
    AugmentStats {
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Train a classifier on the complementary labels.
    Train {
        #[command(flatten)]
        overrides: Overrides,
        /// Attach ordinary labels to track noise and allow oracle filters.
        #[arg(long)]
        oracle_diagnostics: bool,
    },
    /// Gradient bias/variance protocol.
    GradAnalysis {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum, default_value = "sampled")]
        estimator: EstimatorArg,
        #[arg(long, value_enum, default_value = "not-ordinary")]
        reference: ReferenceArg,
        #[arg(long, default_value_t = 2000)]
        subsample: usize,
        /// Use the ordinary classes as clusters.
        #[arg(long)]
        oracle_clusters: bool,
    },
    /// Noise ratio of a mixing policy over repeated passes.
    NoiseReport {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long)]
        oracle_clusters: bool,
    },
    /// Summarize training runs.
    Report {
        /// Run directories, or directories containing them.
        runs: Vec<PathBuf>,
    },
}

fn parse_kebab<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::Config(format!("unknown {what} '{value}'")))
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(l) = &self.loss {
            cfg.loss = parse_kebab::<LossName>("loss", l)?;
        }
        if let Some(p) = &self.policy {
            cfg.policy = parse_kebab::<PolicyName>("policy", p)?;
        }
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if let Some(c) = self.idw_c {
            cfg.idw_c = c;
        }
        if let Some(c) = self.clusters {
            cfg.clusters = c;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| cll_core::Error::io(&cli.out, e))?;
    let mut cfg = load_config(&cli)?;
    let ctx = commands::Context { out: cli.out.clone() };
    match &cli.command {
        Command::GenLabels { setup, rho_ord, rho_trans } => {
            if let Some(s) = setup {
                cfg.setup = *s;
            }
            if let Some(r) = rho_ord {
                cfg.rho_ord = *r;
            }
            if let Some(r) = rho_trans {
                cfg.rho_trans = *r;
            }
            cfg.validate()?;
            commands::gen_labels(&ctx, &cfg)
        }
        Command::Embed { embedding } => commands::embed(&ctx, &cfg, embedding.as_deref()),
        Command::Cluster { clusters, oracle_labels } => {
            if let Some(c) = clusters {
                cfg.clusters = *c;
            }
            cfg.validate()?;
            commands::cluster(&ctx, &cfg, *oracle_labels)
        }
        Command::EmbedCluster {
            embedding,
            clusters,
            oracle_labels,
        } => {
            if let Some(c) = clusters {
                cfg.clusters = *c;
            }
            cfg.validate()?;
            commands::embed(&ctx, &cfg, embedding.as_deref())?;
            commands::cluster(&ctx, &cfg, *oracle_labels)
        }
        Command::AugmentStats { alpha } => {
            if alpha.is_some() {
                cfg.alpha = *alpha;
            }
            cfg.validate()?;
            commands::augment_stats(&ctx, &cfg)
        }
        Command::Train {
            overrides,
            oracle_diagnostics,
        } => {
            overrides.apply(&mut cfg)?;
            cfg.validate()?;
            commands::train(&ctx, &cfg, *oracle_diagnostics)
        }
        Command::GradAnalysis {
            overrides,
            estimator,
            reference,
            subsample,
            oracle_clusters,
        } => {
            overrides.apply(&mut cfg)?;
            cfg.validate()?;
            commands::grad_analysis(&ctx, &cfg, *estimator, *reference, *subsample, *oracle_clusters)
        }
        Command::NoiseReport {
            overrides,
            trials,
            oracle_clusters,
        } => {
            overrides.apply(&mut cfg)?;
            cfg.validate()?;
            commands::noise_report(&ctx, &cfg, *trials, *oracle_clusters)
        }
        Command::Report { runs } => report::report(&ctx, runs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
