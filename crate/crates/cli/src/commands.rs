//! Subcommand implementations. Every command digests its inputs, computes,
//! writes outputs with deterministic formatting and commits a manifest last.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::Serialize;

use cll_core::augment::{pair_stats, MixKind, MixPolicy, PairStats};
use cll_core::data::config::LossName;
use cll_core::data::{
    self, load_configured, read_embeddings, read_index_map, read_labels_csv, write_embeddings, write_index_map,
    write_labels_csv, ExperimentConfig, LabeledSet, OrdinaryLabels,
};
use cll_core::diagnostics::{gradient_analysis, noise_report as core_noise_report, BReference, Estimator, GradAnalysisConfig};
use cll_core::embed::{cluster_purity, kmeans, pca_embed};
use cll_core::data::results::ResultRow;
use cll_core::labelgen::{empirical_transition, generate, ImbalanceSpec, Setup, TransitionMatrix};
use cll_core::losses::CllLoss;
use cll_core::model::{write_checkpoint, Mlp, TrainConfig};
use cll_core::rng::{domain, stream};

use crate::manifest::RunManifest;
use crate::{CliError, EstimatorArg, ReferenceArg};

pub const KEPT: &str = "kept.csv";
pub const COMPLEMENTARY: &str = "complementary.csv";
pub const TRANSITION: &str = "transition.csv";
pub const EMBEDDINGS: &str = "embeddings.bin";
pub const CLUSTERS: &str = "clusters.csv";

pub struct Context {
    pub out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Path of a file an earlier subcommand must have produced.
    fn prerequisite(&self, name: &str, producer: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Data(format!(
                "missing prerequisite file {} (run `cll {producer}` first)",
                p.display()
            )))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Core(cll_core::Error::io(path, e))
}

fn dataset_inputs(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in [&cfg.train_images, &cfg.train_labels, &cfg.test_images, &cfg.test_labels]
        .into_iter()
        .flatten()
    {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file())
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if cfg.train_images.is_none() {
        return Err(CliError::Config("train_images is not set (pass --config)".into()));
    }
    Ok(files)
}

fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn read_matrix(path: &Path) -> Result<Array2<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(CliError::Data(format!("{}: matrix is not square", path.display())));
    }
    Ok(Array2::from_shape_vec((k, k), rows.concat()).expect("square"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(io_err(path))
}

fn finish(ctx: &Context, mut manifest: RunManifest, outputs: &[&str]) -> Result<(), CliError> {
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.commit(&ctx.out)?;
    Ok(())
}

fn opt(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// Training split restricted to `kept.csv`, with its complementary labels.
struct TrainingData {
    set: LabeledSet,
    ordinary: OrdinaryLabels,
    test: Option<data::Split>,
}

fn load_training(ctx: &Context, cfg: &ExperimentConfig) -> Result<TrainingData, CliError> {
    let kept_path = ctx.prerequisite(KEPT, "gen-labels")?;
    let comp_path = ctx.prerequisite(COMPLEMENTARY, "gen-labels")?;
    let splits = load_configured(cfg)?;
    let (x, y) = splits.train;
    let kept = read_index_map(&kept_path)?;
    if let Some(&bad) = kept.iter().find(|&&i| i >= x.rows()) {
        return Err(CliError::Data(format!(
            "{}: index {bad} is outside the {}-row training split",
            kept_path.display(),
            x.rows()
        )));
    }
    let ybar = read_labels_csv(&comp_path, y.num_classes())?;
    let ordinary = y.select(&kept);
    let set = LabeledSet::new(x.select(&kept), ybar)?;
    Ok(TrainingData {
        set,
        ordinary,
        test: splits.test,
    })
}

fn attach_clusters(ctx: &Context, set: LabeledSet) -> Result<LabeledSet, CliError> {
    let p = ctx.prerequisite(CLUSTERS, "cluster")?;
    Ok(set.with_clusters(read_index_map(&p)?)?)
}

fn policy_from(cfg: &ExperimentConfig) -> Result<Option<MixPolicy>, CliError> {
    MixKind::from_policy(cfg.policy)
        .map(|kind| MixPolicy::new(kind, cfg.resolved_alpha(), cfg.idw_c))
        .transpose()
        .map_err(CliError::from)
}

fn loss_from(ctx: &Context, cfg: &ExperimentConfig, inputs: &mut Vec<PathBuf>) -> Result<CllLoss, CliError> {
    let transition = if cfg.loss == LossName::Fwd {
        let p = ctx.prerequisite(TRANSITION, "gen-labels")?;
        inputs.push(p.clone());
        Some(TransitionMatrix::new(read_matrix(&p)?)?)
    } else {
        None
    };
    Ok(CllLoss::from_name(cfg.loss, cfg.gamma, transition.as_ref())?)
}

#[derive(Serialize)]
struct ClassCount {
    class: usize,
    available: usize,
    kept: usize,
}

pub fn gen_labels(ctx: &Context, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let manifest = RunManifest::begin("gen-labels", cfg, vec![], &dataset_inputs(cfg)?)?;
    let (_, y) = load_configured(cfg)?.train;
    let spec = ImbalanceSpec {
        setup: Setup::from_id(cfg.setup)?,
        rho_ordinary: cfg.rho_ord,
        rho_transition: cfg.rho_trans,
    };
    let g = generate(&y, &spec, cfg.seed)?;
    let kept_y = y.select(&g.kept);
    let empirical = empirical_transition(kept_y.as_slice(), g.complementary.as_slice(), y.num_classes())?;
    let available = y.class_counts();
    let counts: Vec<ClassCount> = kept_y
        .class_counts()
        .into_iter()
        .enumerate()
        .map(|(class, kept)| ClassCount {
            class,
            available: available[class],
            kept,
        })
        .collect();

    write_index_map(ctx.path(KEPT), &g.kept)?;
    write_labels_csv(ctx.path(COMPLEMENTARY), &g.complementary)?;
    write_matrix(&ctx.path(TRANSITION), g.transition.entries())?;
    write_matrix(&ctx.path("empirical_transition.csv"), &empirical)?;
    write_csv(&ctx.path("class_counts.csv"), &counts)?;
    println!(
        "kept {} of {} instances; {} classes",
        g.kept.len(),
        y.len(),
        y.num_classes()
    );
    finish(
        ctx,
        manifest,
        &[KEPT, COMPLEMENTARY, TRANSITION, "empirical_transition.csv", "class_counts.csv"],
    )
}

pub fn embed(ctx: &Context, cfg: &ExperimentConfig, external: Option<&Path>) -> Result<(), CliError> {
    let out = ctx.path(EMBEDDINGS);
    if let Some(src) = external {
        let manifest = RunManifest::begin("embed", cfg, vec![opt("embedding", src.display())], &[src.to_path_buf()])?;
        let emb = read_embeddings(src)?;
        if let Ok(kept) = read_index_map(ctx.path(KEPT)) {
            if kept.len() != emb.rows() {
                return Err(CliError::Data(format!(
                    "{} has {} rows but {} lists {} instances",
                    src.display(),
                    emb.rows(),
                    KEPT,
                    kept.len()
                )));
            }
        }
        write_embeddings(&out, &emb)?;
        println!("validated {} x {} embedding", emb.rows(), emb.cols());
        return finish(ctx, manifest, &[EMBEDDINGS]);
    }
    let mut inputs = dataset_inputs(cfg)?;
    let kept_path = ctx.path(KEPT);
    let kept = kept_path.is_file().then_some(kept_path);
    inputs.extend(kept.clone());
    let manifest = RunManifest::begin("embed", cfg, vec![], &inputs)?;
    let (x, _) = load_configured(cfg)?.train;
    let x = match &kept {
        Some(p) => {
            let idx = read_index_map(p)?;
            if idx.iter().any(|&i| i >= x.rows()) {
                return Err(CliError::Data(format!("{}: index outside the training split", p.display())));
            }
            x.select(&idx)
        }
        None => x,
    };
    let emb = pca_embed(&x, cfg.embed_dim, cfg.seed)?;
    write_embeddings(&out, &emb)?;
    println!("embedded {} instances into {} dimensions", emb.rows(), emb.cols());
    finish(ctx, manifest, &[EMBEDDINGS])
}

#[derive(Serialize)]
struct InertiaRow {
    iteration: usize,
    inertia: f64,
}

#[derive(Serialize)]
struct PurityRow {
    clusters: usize,
    purity: f64,
}

pub fn cluster(ctx: &Context, cfg: &ExperimentConfig, oracle_labels: bool) -> Result<(), CliError> {
    let emb_path = ctx.prerequisite(EMBEDDINGS, "embed")?;
    let mut inputs = vec![emb_path.clone()];
    let oracle = if oracle_labels {
        let kept = ctx.prerequisite(KEPT, "gen-labels")?;
        inputs.extend(dataset_inputs(cfg)?);
        inputs.push(kept.clone());
        Some(kept)
    } else {
        None
    };
    let manifest = RunManifest::begin(
        "cluster",
        cfg,
        vec![opt("oracle_labels", oracle_labels)],
        &inputs,
    )?;
    let emb = read_embeddings(&emb_path)?;
    let a = kmeans(&emb, cfg.clusters, cfg.seed, cfg.kmeans_max_iter, cfg.kmeans_tol)?;
    write_index_map(ctx.path(CLUSTERS), &a.labels)?;
    let history: Vec<InertiaRow> = a
        .inertia_history
        .iter()
        .enumerate()
        .map(|(iteration, &inertia)| InertiaRow { iteration, inertia })
        .collect();
    write_csv(&ctx.path("inertia.csv"), &history)?;
    let mut outputs = vec![CLUSTERS, "inertia.csv"];
    println!("k-means: {} clusters, inertia {}", cfg.clusters, a.inertia);
    if let Some(kept) = oracle {
        let (_, y) = load_configured(cfg)?.train;
        let idx = read_index_map(&kept)?;
        if idx.len() != a.labels.len() || idx.iter().any(|&i| i >= y.len()) {
            return Err(CliError::Data(format!(
                "{} does not match the {} clustered instances",
                kept.display(),
                a.labels.len()
            )));
        }
        let purity = cluster_purity(&a.labels, y.select(&idx).as_slice())?;
        write_csv(
            &ctx.path("purity.csv"),
            &[PurityRow {
                clusters: cfg.clusters,
                purity,
            }],
        )?;
        println!("purity {purity}");
        outputs.push("purity.csv");
    }
    finish(ctx, manifest, &outputs)
}

#[derive(Serialize)]
struct AugmentRow {
    policy: &'static str,
    tuples: usize,
    noise_ratio: f64,
    same_class_rate: f64,
    mixup_nf_pass: f64,
    intra_class_pass: f64,
    extra_class_pass: f64,
}

impl AugmentRow {
    fn new(policy: &'static str, s: &PairStats) -> Self {
        let rate = |c: usize| if s.tuples == 0 { 0.0 } else { c as f64 / s.tuples as f64 };
        Self {
            policy,
            tuples: s.tuples,
            noise_ratio: s.noise_ratio(),
            same_class_rate: rate(s.same_class),
            mixup_nf_pass: rate(s.pass_mixup_nf),
            intra_class_pass: rate(s.pass_intra_class),
            extra_class_pass: rate(s.pass_extra_class),
        }
    }
}

/// One shuffled pass of each unfiltered policy; ICM and MICM only when
/// clusters exist.
pub fn augment_stats(ctx: &Context, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let mut inputs = dataset_inputs(cfg)?;
    inputs.push(ctx.prerequisite(KEPT, "gen-labels")?);
    inputs.push(ctx.prerequisite(COMPLEMENTARY, "gen-labels")?);
    let clusters = ctx.path(CLUSTERS);
    let have_clusters = clusters.is_file();
    if have_clusters {
        inputs.push(clusters);
    }
    let manifest = RunManifest::begin("augment-stats", cfg, vec![], &inputs)?;
    let data = load_training(ctx, cfg)?;
    let mut set = data.set.with_ordinary(data.ordinary)?;
    if have_clusters {
        set = attach_clusters(ctx, set)?;
    }
    let mut kinds = vec![MixKind::Mixup];
    if have_clusters {
        kinds.extend([MixKind::Icm, MixKind::Micm]);
    }
    let y = set.ordinary.as_ref().expect("attached").as_slice().to_vec();
    let yb = set.complementary.as_slice();
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut stream(cfg.seed, &[domain::NOISE, u64::MAX]));
    let mut rows = Vec::new();
    for kind in kinds {
        let policy = MixPolicy::new(kind, cfg.resolved_alpha(), cfg.idw_c)?;
        let mut total = PairStats::default();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let batch = policy.generate(&set, chunk, cfg.seed, b as u64)?;
            let s = pair_stats(&batch, &y, yb)?;
            total.tuples += s.tuples;
            total.same_class += s.same_class;
            total.noisy += s.noisy;
            total.pass_mixup_nf += s.pass_mixup_nf;
            total.pass_intra_class += s.pass_intra_class;
            total.pass_extra_class += s.pass_extra_class;
        }
        rows.push(AugmentRow::new(kind.name(), &total));
    }
    let path = ctx.path("augment_stats.csv");
    write_csv(&path, &rows)?;
    print!("{}", std::fs::read_to_string(&path).map_err(io_err(&path))?);
    finish(ctx, manifest, &["augment_stats.csv"])
}

#[derive(Serialize)]
struct HistoryRow {
    epoch: usize,
    train_loss: f64,
    test_accuracy: Option<f64>,
    noise_ratio: Option<f64>,
    synthetic_rows: usize,
}

pub fn train(ctx: &Context, cfg: &ExperimentConfig, oracle_diagnostics: bool) -> Result<(), CliError> {
    let policy = policy_from(cfg)?;
    if let Some(p) = &policy {
        if p.kind.needs_oracle() && !oracle_diagnostics {
            return Err(CliError::Config(format!(
                "policy {} filters with ordinary labels and needs --oracle-diagnostics",
                p.kind.name()
            )));
        }
    }
    let needs_clusters = policy.is_some_and(|p| p.kind.needs_clusters());
    let mut inputs = dataset_inputs(cfg)?;
    inputs.push(ctx.prerequisite(KEPT, "gen-labels")?);
    inputs.push(ctx.prerequisite(COMPLEMENTARY, "gen-labels")?);
    if needs_clusters {
        inputs.push(ctx.prerequisite(CLUSTERS, "cluster")?);
    }
    let loss = loss_from(ctx, cfg, &mut inputs)?;
    let manifest = RunManifest::begin(
        "train",
        cfg,
        vec![opt("oracle_diagnostics", oracle_diagnostics)],
        &inputs,
    )?;

    let data = load_training(ctx, cfg)?;
    let mut set = data.set;
    if oracle_diagnostics {
        set = set.with_ordinary(data.ordinary)?;
    }
    if needs_clusters {
        set = attach_clusters(ctx, set)?;
    }
    let test = data.test.as_ref().map(|(x, y)| (x, y));
    let (model, history) = cll_core::model::train(&TrainConfig::from(cfg), &set, policy.as_ref(), &loss, test)?;

    write_checkpoint(&ctx.path("model.bin"), &model)?;
    let rows: Vec<HistoryRow> = history
        .records
        .iter()
        .map(|r| HistoryRow {
            epoch: r.epoch,
            train_loss: r.train_loss,
            test_accuracy: r.test_accuracy,
            noise_ratio: r.noise_ratio,
            synthetic_rows: r.synthetic_rows,
        })
        .collect();
    write_csv(&ctx.path("history.csv"), &rows)?;
    let mut results = Vec::new();
    let row = |epoch: usize, split: &str, metric: &str, value: f64| ResultRow {
        run_id: manifest.run_id.clone(),
        seed: cfg.seed,
        epoch,
        split: split.into(),
        metric: metric.into(),
        value,
    };
    for r in &history.records {
        results.push(row(r.epoch, "train", "loss", r.train_loss));
        if let Some(n) = r.noise_ratio {
            results.push(row(r.epoch, "train", "noise_ratio", n));
        }
        if let Some(a) = r.test_accuracy {
            results.push(row(r.epoch, "test", "accuracy", a));
        }
    }
    data::results::write_results(ctx.path("results.csv"), &results)?;
    let wall: f64 = history.wall_seconds.iter().sum();
    match history.final_accuracy() {
        Some(a) => println!("final test accuracy {a:.4}"),
        None => println!("trained {} epochs (no test split)", history.records.len()),
    }
    eprintln!("wall time {wall:.1}s");
    finish(ctx, manifest, &["model.bin", "history.csv", "results.csv"])
}

#[derive(Serialize)]
struct GradRow {
    epoch: usize,
    mse: f64,
    bias_sq: f64,
    variance: f64,
}

pub fn grad_analysis(
    ctx: &Context,
    cfg: &ExperimentConfig,
    estimator: EstimatorArg,
    reference: ReferenceArg,
    subsample: usize,
    oracle_clusters: bool,
) -> Result<(), CliError> {
    let kind = match estimator {
        EstimatorArg::Exhaustive | EstimatorArg::Sampled => None,
        EstimatorArg::Mixup => Some(MixKind::Mixup),
        EstimatorArg::Icm => Some(MixKind::Icm),
        EstimatorArg::Micm => Some(MixKind::Micm),
        EstimatorArg::MixupNf => Some(MixKind::MixupNf),
        EstimatorArg::IntraClassNf => Some(MixKind::IntraClassNf),
        EstimatorArg::ExtraClassNf => Some(MixKind::ExtraClassNf),
    };
    let est = match (estimator, kind) {
        (EstimatorArg::Exhaustive, _) => Estimator::Exhaustive,
        (_, None) => Estimator::Sampled,
        (_, Some(k)) => Estimator::Policy(MixPolicy::new(k, cfg.resolved_alpha(), cfg.idw_c)?),
    };
    let file_clusters = kind.is_some_and(|k| k.needs_clusters()) && !oracle_clusters;
    let mut inputs = dataset_inputs(cfg)?;
    inputs.push(ctx.prerequisite(KEPT, "gen-labels")?);
    inputs.push(ctx.prerequisite(COMPLEMENTARY, "gen-labels")?);
    if file_clusters {
        inputs.push(ctx.prerequisite(CLUSTERS, "cluster")?);
    }
    let loss = loss_from(ctx, cfg, &mut inputs)?;
    let est_name = format!("{estimator:?}").to_lowercase();
    let manifest = RunManifest::begin(
        "grad-analysis",
        cfg,
        vec![
            opt("estimator", &est_name),
            opt("reference", format!("{reference:?}").to_lowercase()),
            opt("subsample", subsample),
            opt("oracle_clusters", oracle_clusters),
        ],
        &inputs,
    )?;
    let data = load_training(ctx, cfg)?;
    let ordinary = data.ordinary.as_slice().to_vec();
    let mut set = data.set.with_ordinary(data.ordinary)?;
    if oracle_clusters {
        set = set.with_clusters(ordinary)?;
    } else if file_clusters {
        set = attach_clusters(ctx, set)?;
    }
    let mut gcfg = GradAnalysisConfig::new(est, cfg.seed);
    gcfg.reference = match reference {
        ReferenceArg::NotOrdinary => BReference::NotOrdinary,
        ReferenceArg::NotComplementary => BReference::NotComplementary,
    };
    gcfg.subsample = subsample;
    gcfg.batch_size = cfg.batch_size;
    let mut dims = vec![set.dim()];
    dims.extend(&cfg.hidden);
    dims.push(set.num_classes());
    let model = Mlp::init(&dims, cfg.seed)?;
    let stats = gradient_analysis(&model, &set, &loss, &gcfg, cfg.epochs)?;
    let rows: Vec<GradRow> = stats
        .iter()
        .map(|s| GradRow {
            epoch: s.epoch,
            mse: s.mse,
            bias_sq: s.bias_sq,
            variance: s.variance,
        })
        .collect();
    write_csv(&ctx.path("grad_analysis.csv"), &rows)?;
    let mean = rows.iter().map(|r| r.mse).sum::<f64>() / rows.len().max(1) as f64;
    println!("{est_name}: mean mse {mean:.6} over {} epochs", rows.len());
    finish(ctx, manifest, &["grad_analysis.csv"])
}

#[derive(Serialize)]
struct NoiseRow {
    policy: &'static str,
    class: String,
    tuples: usize,
    noisy: usize,
    noise_ratio: f64,
}

pub fn noise_report(ctx: &Context, cfg: &ExperimentConfig, trials: usize, oracle_clusters: bool) -> Result<(), CliError> {
    let policy = policy_from(cfg)?.ok_or_else(|| CliError::Config("noise-report needs a mixing policy (--policy)".into()))?;
    let file_clusters = policy.kind.needs_clusters() && !oracle_clusters;
    let mut inputs = dataset_inputs(cfg)?;
    inputs.push(ctx.prerequisite(KEPT, "gen-labels")?);
    inputs.push(ctx.prerequisite(COMPLEMENTARY, "gen-labels")?);
    if file_clusters {
        inputs.push(ctx.prerequisite(CLUSTERS, "cluster")?);
    }
    let manifest = RunManifest::begin(
        "noise-report",
        cfg,
        vec![opt("trials", trials), opt("oracle_clusters", oracle_clusters)],
        &inputs,
    )?;
    let data = load_training(ctx, cfg)?;
    let ordinary = data.ordinary.as_slice().to_vec();
    let mut set = data.set.with_ordinary(data.ordinary)?;
    if oracle_clusters {
        set = set.with_clusters(ordinary)?;
    } else if file_clusters {
        set = attach_clusters(ctx, set)?;
    }
    let r = core_noise_report(&policy, &set, trials, cfg.batch_size, cfg.seed)?;
    let ratio = |n: usize, t: usize| if t == 0 { 0.0 } else { n as f64 / t as f64 };
    let mut rows: Vec<NoiseRow> = r
        .per_class
        .iter()
        .map(|c| NoiseRow {
            policy: r.policy,
            class: c.class.to_string(),
            tuples: c.tuples,
            noisy: c.noisy,
            noise_ratio: ratio(c.noisy, c.tuples),
        })
        .collect();
    rows.push(NoiseRow {
        policy: r.policy,
        class: "all".into(),
        tuples: r.tuples,
        noisy: r.per_class.iter().map(|c| c.noisy).sum(),
        noise_ratio: r.noise_ratio,
    });
    write_csv(&ctx.path("noise_report.csv"), &rows)?;
    println!("{}: noise ratio {:.6} over {} tuples", r.policy, r.noise_ratio, r.tuples);
    finish(ctx, manifest, &["noise_report.csv"])
}
