mod common;

use common::{brute_neighbors, dataset};
use ddos_core::classifiers::mlp::{max_relative_gradient_error, Network};
use ddos_core::classifiers::{gradient_check, ModelArtifact, ModelState};
use ddos_core::dataset::CategoryEncoder;
use ddos_core::synth::{generate, SynthConfig};
use ddos_core::{predict, train, Error, ModelKind, ModelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let y = (0..n).map(|i| (i % 2) as u8).collect();
    (rows, y)
}

fn blobs(n: usize, seed: u64) -> ddos_core::Dataset {
    generate(&SynthConfig {
        n_benign: n,
        n_ddos: n,
        n_features: 4,
        class_separation: 3.0,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn single_full_tree_memorizes_distinct_rows() {
    let (rows, y) = random_rows(200, 3, 1);
    let ds = dataset(&rows, &y);
    let spec = ModelSpec::new(ModelKind::Rf).with("n_trees", 1.0).with("bootstrap", 0.0).with("max_features", 3.0);
    let m = train(&spec, &ds).unwrap();
    assert_eq!(predict(&m, &ds).unwrap().labels, y);
}

#[test]
fn knn_one_reproduces_training_labels() {
    let (rows, y) = random_rows(150, 2, 2);
    let ds = dataset(&rows, &y);
    let m = train(&ModelSpec::new(ModelKind::Knn).with("k", 1.0), &ds).unwrap();
    assert_eq!(predict(&m, &ds).unwrap().labels, y);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn knn_matches_brute_force(n in 5usize..300, k in 1usize..9, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // coarse grid values give many distance ties
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(0..6) as f64).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let ds = dataset(&rows, &y);
        let m = train(&ModelSpec::new(ModelKind::Knn).with("k", k as f64), &ds).unwrap();
        let queries: Vec<Vec<f64>> = (0..20).map(|_| (0..2).map(|_| rng.random_range(0..12) as f64 / 2.0).collect()).collect();
        let q = dataset(&queries, &[0; 20]);
        let pred = predict(&m, &q).unwrap();
        let kk = k.min(n);
        for (i, row) in queries.iter().enumerate() {
            let nb = brute_neighbors(&ds.x, row, kk, None);
            let pos = nb.iter().filter(|&&j| y[j] == 1).count();
            let expect = if 2 * pos == kk { y[nb[0]] } else { u8::from(2 * pos > kk) };
            prop_assert_eq!(pred.labels[i], expect);
            if 2 * pos != kk {
                prop_assert_eq!(pred.positive_probabilities[i], pos as f64 / kk as f64);
            }
        }
    }
}

#[test]
fn mlp_learns_xor() {
    let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let y = vec![0, 1, 1, 0];
    let ds = dataset(&rows, &y);
    let spec = ModelSpec::new(ModelKind::Mlp)
        .with("epochs", 2000.0)
        .with("learning_rate", 0.05)
        .with("batch_size", 4.0)
        .with_seed(3);
    let m = train(&spec, &ds).unwrap();
    let ModelState::Mlp(mlp) = &m.state else { unreachable!() };
    assert!(*mlp.epoch_loss.last().unwrap() < 0.05, "{:?}", mlp.epoch_loss.last());
    assert_eq!(predict(&m, &ds).unwrap().labels, y);
}

#[test]
fn gbt_training_loss_non_increasing() {
    let ds = generate(&SynthConfig {
        n_benign: 300,
        n_ddos: 200,
        n_features: 5,
        class_separation: 1.0,
        noise_fraction: 0.1,
        seed: 4,
    })
    .unwrap();
    for eta in [0.1, 0.3, 1.0] {
        let spec = ModelSpec::new(ModelKind::Gbt).with("rounds", 60.0).with("learning_rate", eta);
        let m = train(&spec, &ds).unwrap();
        let ModelState::Gbt(g) = &m.state else { unreachable!() };
        assert_eq!(g.training_loss.len(), 61);
        for w in g.training_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn forest_probability_is_vote_fraction() {
    let ds = blobs(100, 5);
    let spec = ModelSpec::new(ModelKind::Rf).with("n_trees", 7.0).with_seed(9);
    let m = train(&spec, &ds).unwrap();
    let ModelState::Rf(rf) = &m.state else { unreachable!() };
    let pred = predict(&m, &ds).unwrap();
    for (i, row) in ds.x.iter_rows().enumerate() {
        let votes = rf.trees.iter().filter(|t| t.predict(row) >= 0.5).count();
        assert_eq!(pred.positive_probabilities[i], votes as f64 / 7.0);
    }
}

#[test]
fn labels_are_thresholded_probabilities_for_every_model() {
    let ds = blobs(80, 6);
    for kind in ModelKind::ALL {
        let m = train(&ModelSpec::new(kind).with_seed(1), &ds).unwrap();
        let p = predict(&m, &ds).unwrap();
        for (l, q) in p.labels.iter().zip(&p.positive_probabilities) {
            assert!((0.0..=1.0).contains(q));
            assert_eq!(*l, u8::from(*q >= 0.5), "{kind}");
        }
    }
}

#[test]
fn predictions_independent_of_thread_count() {
    let ds = blobs(120, 7);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            ModelKind::ALL
                .iter()
                .map(|&k| {
                    let m = train(&ModelSpec::new(k).with_seed(11), &ds).unwrap();
                    predict(&m, &ds).unwrap()
                })
                .collect::<Vec<_>>()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn save_load_predict_identical() {
    let ds = blobs(60, 8);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = train(&ModelSpec::new(kind).with_seed(2), &ds).unwrap();
        let art = ModelArtifact::new(m, ds.feature_names.clone(), "label", CategoryEncoder::default(), (0..4).collect(), None);
        let path = dir.path().join(format!("{}.json", kind.tag()));
        art.save(&path).unwrap();
        let back = ModelArtifact::load(&path).unwrap();
        assert_eq!(back, art);
        assert_eq!(back.predict_raw(&ds.x).unwrap(), art.predict_raw(&ds.x).unwrap());
    }
    std::fs::write(dir.path().join("bad.json"), r#"{"format":"other","version":1}"#).unwrap();
    assert!(matches!(ModelArtifact::load(dir.path().join("bad.json")), Err(Error::ModelFile(_))));
}

#[test]
fn arity_and_hyperparameter_errors() {
    let ds = blobs(30, 9);
    let m = train(&ModelSpec::new(ModelKind::Knn), &ds).unwrap();
    let narrow = ds.select_features(&[0, 1]);
    assert!(matches!(predict(&m, &narrow), Err(Error::ArityMismatch { expected: 4, actual: 2 })));
    assert!(train(&ModelSpec::new(ModelKind::Knn).with("k", 0.0), &ds).is_err());
    assert!(train(&ModelSpec::new(ModelKind::Gbt).with("learning_rate", 0.0), &ds).is_err());
    assert!(train(&ModelSpec::new(ModelKind::Rf).with("depth", 3.0), &ds).is_err());
}

#[test]
fn single_class_training() {
    let (rows, _) = random_rows(20, 2, 3);
    let ds = dataset(&rows, &[1; 20]);
    for kind in [ModelKind::Gbt, ModelKind::Svc, ModelKind::Mlp] {
        assert!(train(&ModelSpec::new(kind), &ds).is_err(), "{kind}");
    }
    for kind in [ModelKind::Rf, ModelKind::Knn] {
        let p = predict(&train(&ModelSpec::new(kind), &ds).unwrap(), &ds).unwrap();
        assert!(p.labels.iter().all(|&l| l == 1));
    }
}

#[test]
fn gradient_check_random_tiny_sets() {
    let (rows, y) = random_rows(5, 3, 0);
    let ds = dataset(&rows, &y);
    let err = gradient_check(&ModelSpec::new(ModelKind::Mlp).with_seed(0), &ds).unwrap();
    assert!(err < 1e-4, "{err}");
    let (rows, y) = random_rows(11, 3, 0);
    assert!(gradient_check(&ModelSpec::new(ModelKind::Mlp), &dataset(&rows, &y)).is_err());
}

#[test]
fn gradient_check_stable_across_steps() {
    let (rows, y) = random_rows(6, 4, 5);
    let ds = dataset(&rows, &y);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = Network::glorot(&[4, 6, 3, 1], &mut rng);
    let a = max_relative_gradient_error(&net, &ds.x, &ds.y, 1e-5);
    let b = max_relative_gradient_error(&net, &ds.x, &ds.y, 1e-6);
    assert!(a < 1e-4 && b < 1e-4, "{a} {b}");
    // both are tiny; "stable" means neither blows past the other by 10x
    // once above the floor where rounding noise dominates
    let floor = 1e-9;
    assert!(a.max(floor) / b.max(floor) < 10.0 && b.max(floor) / a.max(floor) < 10.0, "{a} {b}");
}
