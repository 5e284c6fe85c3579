use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let d = data_dir();
    let text = format!(
        "dataset = \"mnist\"\ntrain_images = {:?}\ntrain_labels = {:?}\nholdout_fraction = 0.2\nhidden = [32]\n{}{extra}",
        d.join("mnist10k-images-idx3-ubyte.gz"),
        d.join("mnist10k-labels-idx1-ubyte.gz"),
        if extra.contains("epochs") { "" } else { "epochs = 2\n" },
    );
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn cll(config: Option<&Path>, out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cll"));
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.arg("--out").arg(out).args(args).output().unwrap()
}

fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "status {:?}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cll(None, dir.path(), &["gen-labels"]);
    assert_eq!(code(&o), 2);
    let o = cll(None, dir.path(), &["bogus-command"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "alpah = 0.1\n");
    let o = cll(Some(&cfg), dir.path(), &["gen-labels"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_prerequisites_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = cll(Some(&cfg), dir.path(), &["train"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kept.csv") && err.contains("gen-labels"), "{err}");

    ok(cll(Some(&cfg), dir.path(), &["gen-labels"]));
    let o = cll(Some(&cfg), dir.path(), &["train", "--policy", "icm"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("clusters.csv"));
}

#[test]
fn corrupt_embedding_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let bad = dir.path().join("ext.bin");
    std::fs::write(&bad, b"NOTMAGIC........").unwrap();
    let o = cll(Some(&cfg), dir.path(), &["embed", "--embedding", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn divergence_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "optimizer = \"sgd\"\nlr = 1e300\nepochs = 1\n");
    ok(cll(Some(&cfg), dir.path(), &["gen-labels"]));
    let o = cll(Some(&cfg), dir.path(), &["train"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_filters_require_the_diagnostics_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "epochs = 1\n");
    ok(cll(Some(&cfg), dir.path(), &["gen-labels"]));
    let o = cll(Some(&cfg), dir.path(), &["train", "--policy", "mixup-nf"]);
    assert_eq!(code(&o), 2);
    ok(cll(Some(&cfg), dir.path(), &["train", "--policy", "mixup-nf", "--oracle-diagnostics"]));
    let history = read(&dir.path().join("history.csv"));
    let last = history.lines().last().unwrap();
    // epoch,train_loss,test_accuracy,noise_ratio,synthetic_rows
    assert_eq!(last.split(',').nth(3).unwrap(), "0.0");
}

#[test]
fn balanced_baseline_keeps_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    ok(cll(Some(&cfg), dir.path(), &["gen-labels", "--setup", "1"]));
    assert_eq!(read(&dir.path().join("kept.csv")).lines().count(), 8000);
    let t = read(&dir.path().join("transition.csv"));
    let first: Vec<f64> = t.lines().next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!(first[1..].iter().all(|&v| (v - 1.0 / 9.0).abs() < 1e-15));
}

#[test]
fn setup_three_reports_both_imbalances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    ok(cll(
        Some(&cfg),
        dir.path(),
        &["gen-labels", "--setup", "3", "--rho-ord", "100", "--rho-trans", "10"],
    ));
    let counts = read(&dir.path().join("class_counts.csv"));
    let kept: Vec<usize> = counts.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(kept.len(), 10);
    let ratio = kept[0] as f64 / kept[9] as f64;
    assert!((ratio - 100.0).abs() < 15.0, "{kept:?}");
    let t = read(&dir.path().join("transition.csv"));
    let row: Vec<f64> = t.lines().next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let off = &row[1..];
    let max = off.iter().copied().fold(0.0, f64::max);
    let min = off.iter().copied().fold(1.0, f64::min);
    assert!((max / min - 10.0).abs() < 1e-9);
    assert!(dir.path().join("empirical_transition.csv").is_file());
}

#[test]
fn clustering_defaults_and_purity_gating() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    ok(cll(Some(&cfg), dir.path(), &["gen-labels"]));
    ok(cll(Some(&cfg), dir.path(), &["embed-cluster"]));
    assert!(!dir.path().join("purity.csv").exists());
    let ids: Vec<usize> = read(&dir.path().join("clusters.csv"))
        .lines()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ids.len(), 8000);
    assert_eq!(ids.iter().max(), Some(&49));
    ok(cll(Some(&cfg), dir.path(), &["cluster", "--oracle-labels"]));
    assert!(dir.path().join("purity.csv").is_file());
}

#[test]
fn external_embedding_is_passed_through() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(cll(Some(&cfg), &a, &["gen-labels"]));
    ok(cll(Some(&cfg), &a, &["embed"]));
    ok(cll(Some(&cfg), &b, &["gen-labels"]));
    let src = a.join("embeddings.bin");
    ok(cll(Some(&cfg), &b, &["embed", "--embedding", src.to_str().unwrap()]));
    assert_eq!(std::fs::read(&src).unwrap(), std::fs::read(b.join("embeddings.bin")).unwrap());
    let manifest = read(&b.join("embed.manifest.json"));
    assert!(manifest.contains("\"embedding\""));
}

#[test]
fn report_aggregates_seeds_and_rejects_mixed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    for seed in ["0", "1", "2"] {
        let out = runs.join(format!("seed{seed}"));
        let cfg = write_config(dir.path(), "epochs = 1\n");
        ok(cll(Some(&cfg), &out, &["--seed", seed, "gen-labels"]));
        ok(cll(Some(&cfg), &out, &["--seed", seed, "train"]));
    }
    let rep = dir.path().join("rep");
    let o = ok(cll(None, &rep, &["report", runs.to_str().unwrap()]));
    let md = read(&rep.join("report.md"));
    assert!(md.contains("| scl-nl | none | 3 |"), "{md}");
    assert!(!String::from_utf8_lossy(&o.stderr).contains("warning"));
    let finals = read(&rep.join("final_accuracy.csv"));
    assert_eq!(finals.lines().count(), 2);
    assert_eq!(read(&rep.join("accuracy_curves.csv")).lines().count(), 4);

    let single = cll(None, &rep, &["report", runs.join("seed0").to_str().unwrap()]);
    assert!(single.status.success());
    assert!(String::from_utf8_lossy(&single.stderr).contains("std reported as 0"));

    let odd = runs.join("odd");
    let cfg = write_config(dir.path(), "epochs = 1\nlr = 0.001\n");
    ok(cll(Some(&cfg), &odd, &["gen-labels"]));
    ok(cll(Some(&cfg), &odd, &["train"]));
    let o = cll(None, &rep, &["report", runs.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("different configurations"));

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let o = cll(None, &rep, &["report", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no runs found"));
}

#[test]
fn fwd_loss_reads_the_generated_transition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "epochs = 1\nloss = \"fwd\"\n");
    ok(cll(Some(&cfg), dir.path(), &["gen-labels", "--setup", "2", "--rho-trans", "10"]));
    ok(cll(Some(&cfg), dir.path(), &["train"]));
    let manifest = read(&dir.path().join("train.manifest.json"));
    assert!(manifest.contains("transition.csv"));
}
