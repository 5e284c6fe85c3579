//! Aggregation of finished runs into a markdown table and plot-data CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cll_core::data::ExperimentConfig;

use crate::commands::Context;
use crate::manifest::RunManifest;
use crate::CliError;

const TRAIN_MANIFEST: &str = "train.manifest.json";
const GRAD_MANIFEST: &str = "grad-analysis.manifest.json";

#[derive(Debug, Deserialize)]
struct HistoryRow {
    epoch: usize,
    #[allow(dead_code)]
    train_loss: f64,
    test_accuracy: Option<f64>,
    noise_ratio: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GradRow {
    epoch: usize,
    mse: f64,
    bias_sq: f64,
    variance: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    run_id: &'a str,
    loss: &'a str,
    policy: &'a str,
    seed: u64,
    epoch: usize,
    value: f64,
}

#[derive(Serialize)]
struct GradCurveRow<'a> {
    run_id: &'a str,
    estimator: &'a str,
    seed: u64,
    epoch: usize,
    mse: f64,
    bias_sq: f64,
    variance: f64,
}

#[derive(Serialize)]
struct FinalRow<'a> {
    loss: &'a str,
    policy: &'a str,
    runs: usize,
    mean: f64,
    std: f64,
}

struct TrainRun {
    manifest: RunManifest,
    history: Vec<HistoryRow>,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Core(cll_core::Error::io(path, e)))
}

fn is_run(dir: &Path) -> bool {
    dir.join(TRAIN_MANIFEST).is_file() || dir.join(GRAD_MANIFEST).is_file()
}

/// Each argument is a run directory or a directory whose immediate
/// subdirectories are runs.
fn discover(args: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut runs = Vec::new();
    for dir in args {
        if is_run(dir) {
            runs.push(dir.clone());
            continue;
        }
        if !dir.is_dir() {
            return Err(CliError::Data(format!("{} is not a directory", dir.display())));
        }
        let mut subs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| cll_core::Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && is_run(p))
            .collect();
        subs.sort();
        runs.extend(subs);
    }
    if runs.is_empty() {
        return Err(CliError::Data("no runs found".into()));
    }
    Ok(runs)
}

fn without_seed(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.seed = 0;
    c.to_toml_string()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn loss_name(cfg: &ExperimentConfig) -> String {
    serde_json::to_value(cfg.loss).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn policy_name(cfg: &ExperimentConfig) -> String {
    serde_json::to_value(cfg.policy).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn report(ctx: &Context, args: &[PathBuf]) -> Result<(), CliError> {
    let dirs = discover(args)?;
    let mut train_runs = Vec::new();
    let mut grad_rows: Vec<(RunManifest, Vec<GradRow>)> = Vec::new();
    for dir in &dirs {
        if dir.join(TRAIN_MANIFEST).is_file() {
            let manifest = RunManifest::load(&dir.join(TRAIN_MANIFEST))?;
            let history = read_rows(&dir.join("history.csv"))?;
            train_runs.push(TrainRun { manifest, history });
        }
        if dir.join(GRAD_MANIFEST).is_file() {
            let manifest = RunManifest::load(&dir.join(GRAD_MANIFEST))?;
            let rows = read_rows(&dir.join("grad_analysis.csv"))?;
            grad_rows.push((manifest, rows));
        }
    }

    // (loss, policy) -> (seedless config, final accuracies)
    let mut cells: BTreeMap<(String, String), (String, Vec<f64>)> = BTreeMap::new();
    let mut accuracy_curves = Vec::new();
    let mut noise_curves = Vec::new();
    let keys: Vec<(String, String)> = train_runs
        .iter()
        .map(|r| (loss_name(&r.manifest.config), policy_name(&r.manifest.config)))
        .collect();
    for (run, key) in train_runs.iter().zip(&keys) {
        let m = &run.manifest;
        let final_acc = run
            .history
            .last()
            .and_then(|h| h.test_accuracy)
            .ok_or_else(|| CliError::Data(format!("run {} has no test accuracy", m.run_id)))?;
        let config = without_seed(&m.config);
        let cell = cells.entry(key.clone()).or_insert_with(|| (config.clone(), Vec::new()));
        if cell.0 != config {
            return Err(CliError::Data(format!(
                "runs in cell {}/{} have different configurations",
                key.0, key.1
            )));
        }
        cell.1.push(final_acc);
        for h in &run.history {
            let point = |value| CurveRow {
                run_id: &m.run_id,
                loss: &key.0,
                policy: &key.1,
                seed: m.seed,
                epoch: h.epoch,
                value,
            };
            if let Some(a) = h.test_accuracy {
                accuracy_curves.push(point(a));
            }
            if let Some(n) = h.noise_ratio {
                noise_curves.push(point(n));
            }
        }
    }

    let mut md = String::from("# Results\n\n");
    let mut finals = Vec::new();
    if !cells.is_empty() {
        md.push_str("| loss | policy | runs | test accuracy |\n|---|---|---|---|\n");
    }
    let mut warnings = Vec::new();
    for ((loss, policy), (_, accs)) in &cells {
        let (mean, std) = mean_std(accs);
        if accs.len() == 1 {
            warnings.push(format!("{loss}/{policy} has a single run; std reported as 0"));
        }
        let _ = writeln!(md, "| {loss} | {policy} | {} | {:.2}±{:.2} |", accs.len(), 100.0 * mean, 100.0 * std);
        finals.push(FinalRow {
            loss,
            policy,
            runs: accs.len(),
            mean,
            std,
        });
    }
    for w in &warnings {
        eprintln!("warning: {w}");
        let _ = writeln!(md, "\n> warning: {w}");
    }

    let mut grad_curves = Vec::new();
    for (m, rows) in &grad_rows {
        let estimator = m
            .options
            .iter()
            .find(|(k, _)| k == "estimator")
            .map_or("unknown", |(_, v)| v.as_str());
        for r in rows {
            grad_curves.push(GradCurveRow {
                run_id: &m.run_id,
                estimator,
                seed: m.seed,
                epoch: r.epoch,
                mse: r.mse,
                bias_sq: r.bias_sq,
                variance: r.variance,
            });
        }
    }
    if !grad_curves.is_empty() {
        md.push_str("\n| estimator | runs | mean mse | mean bias² | mean variance |\n|---|---|---|---|---|\n");
        let mut by_est: BTreeMap<&str, Vec<&GradCurveRow>> = BTreeMap::new();
        for r in &grad_curves {
            by_est.entry(r.estimator).or_default().push(r);
        }
        for (est, rows) in by_est {
            let n = rows.len() as f64;
            let runs = rows.iter().map(|r| r.run_id).collect::<std::collections::BTreeSet<_>>().len();
            let _ = writeln!(
                md,
                "| {est} | {runs} | {:.6} | {:.6} | {:.6} |",
                rows.iter().map(|r| r.mse).sum::<f64>() / n,
                rows.iter().map(|r| r.bias_sq).sum::<f64>() / n,
                rows.iter().map(|r| r.variance).sum::<f64>() / n,
            );
        }
    }

    let out = &ctx.out;
    let curve_header = ["run_id", "loss", "policy", "seed", "epoch", "value"];
    std::fs::write(out.join("report.md"), &md).map_err(|e| cll_core::Error::io(out.join("report.md"), e))?;
    write_rows(&out.join("accuracy_curves.csv"), &accuracy_curves, &curve_header)?;
    write_rows(&out.join("noise_curves.csv"), &noise_curves, &curve_header)?;
    write_rows(&out.join("final_accuracy.csv"), &finals, &["loss", "policy", "runs", "mean", "std"])?;
    write_rows(
        &out.join("grad_curves.csv"),
        &grad_curves,
        &["run_id", "estimator", "seed", "epoch", "mse", "bias_sq", "variance"],
    )?;
    print!("{md}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_over_three() {
        let (m, s) = mean_std(&[0.7, 0.8, 0.9]);
        assert!((m - 0.8).abs() < 1e-12);
        assert!((s - 0.1).abs() < 1e-12);
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
    }
}
