use std::path::Path;

use cll_core::augment::{MixKind, MixPolicy};
use cll_core::data::{load_idx, read_embeddings, write_embeddings, LabeledSet};
use cll_core::diagnostics::noise_report;
use cll_core::embed::{cluster_purity, kmeans, pca_embed};
use cll_core::labelgen::{generate, ImbalanceSpec, Setup};
use cll_core::losses::CllLoss;
use cll_core::model::{evaluate, read_checkpoint, train, write_checkpoint, TrainConfig};

fn fixture() -> (cll_core::data::FeatureMatrix, cll_core::data::OrdinaryLabels) {
    let d = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    load_idx(d.join("mnist10k-images-idx3-ubyte.gz"), d.join("mnist10k-labels-idx1-ubyte.gz")).unwrap()
}

#[test]
fn mnist_fixture_shape() {
    let (x, y) = fixture();
    assert_eq!((x.rows(), x.cols()), (10_000, 784));
    assert_eq!(y.num_classes(), 10);
    assert!(y.class_counts().iter().all(|&c| c > 800));
}

#[test]
fn generate_embed_cluster_train() {
    let (x, y) = fixture();
    let idx: Vec<usize> = (0..3000).collect();
    let (x, y) = (x.select(&idx), y.select(&idx));
    let spec = ImbalanceSpec {
        setup: Setup::Both,
        rho_ordinary: 10.0,
        rho_transition: 5.0,
    };
    let g = generate(&y, &spec, 1).unwrap();
    let (xk, yk) = (x.select(&g.kept), y.select(&g.kept));
    let counts = yk.class_counts();
    assert!(counts[0] > counts[9] * 5);

    let emb = pca_embed(&xk, 32, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_embeddings(dir.path().join("e.bin"), &emb).unwrap();
    let emb = read_embeddings(dir.path().join("e.bin")).unwrap();
    let clusters = kmeans(&emb, 30, 1, 100, 1e-4).unwrap();
    let purity = cluster_purity(&clusters.labels, yk.as_slice()).unwrap();
    assert!(purity > 0.6, "purity {purity}");

    let set = LabeledSet::new(xk.clone(), g.complementary.clone())
        .unwrap()
        .with_ordinary(yk.clone())
        .unwrap()
        .with_clusters(clusters.labels)
        .unwrap();
    let noise = |kind| noise_report(&MixPolicy::new(kind, 0.1, 30.0).unwrap(), &set, 1, 256, 1).unwrap().noise_ratio;
    assert!(noise(MixKind::Icm) < noise(MixKind::Mixup));

    let cfg = TrainConfig {
        hidden: vec![64],
        epochs: 5,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let policy = MixPolicy::new(MixKind::Icm, 0.1, 30.0).unwrap();
    let (model, history) = train(&cfg, &set, Some(&policy), &CllLoss::scl_nl(), Some((&xk, &yk))).unwrap();
    assert_eq!(history.records.len(), 5);
    assert!(history.records.iter().all(|r| r.noise_ratio.is_some()));
    let acc = history.final_accuracy().unwrap();
    assert!(acc > 0.3, "accuracy {acc}");

    let path = dir.path().join("model.bin");
    write_checkpoint(&path, &model).unwrap();
    let back = read_checkpoint(&path).unwrap();
    assert_eq!(evaluate(&back, xk.view(), yk.as_slice()).unwrap(), acc);

    let (again, _) = train(&cfg, &set, Some(&policy), &CllLoss::scl_nl(), None).unwrap();
    assert_eq!(again.params(), model.params());
}
