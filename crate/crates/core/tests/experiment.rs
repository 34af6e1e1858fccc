mod common;

use common::dataset;
use ddos_core::experiment::{grid_search, kfold_cv, run_full_experiment, ExperimentConfig, Grid, Preprocessing, Track};
use ddos_core::metrics::core_metrics;
use ddos_core::synth::{generate, SynthConfig};
use ddos_core::{Dataset, ModelKind, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> Dataset {
    generate(&SynthConfig {
        n_benign: 90,
        n_ddos: 60,
        n_features: 5,
        class_separation: 3.0,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn constant_predictor_scores_half_on_balanced_data() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
    let y: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
    let ds = dataset(&rows, &y);
    let spec = ModelSpec::new(ModelKind::Rf).with("max_depth", 0.0).with("bootstrap", 0.0).with("n_trees", 3.0);
    for folds in [2, 4, 5] {
        let cv = kfold_cv(&spec, &ds, folds, 7, &Preprocessing::standardize_only()).unwrap();
        assert_eq!(cv.mean_accuracy, 0.5);
        assert_eq!(cv.folds.len(), folds);
    }
}

#[test]
fn cv_needs_every_class_in_every_fold() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
    let y: Vec<u8> = (0..12).map(|i| u8::from(i < 3)).collect();
    let ds = dataset(&rows, &y);
    assert!(kfold_cv(&ModelSpec::new(ModelKind::Knn), &ds, 4, 0, &Preprocessing::standardize_only()).is_err());
}

#[test]
fn knn_grid_prefers_smoothing_under_label_noise() {
    // two well separated blobs with 15% of labels flipped: k=1 copies the
    // noise, k=5 votes it away
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..200 {
        let c = (i % 2) as f64 * 4.0;
        rows.push(vec![c + rng.random_range(-1.0..1.0), c + rng.random_range(-1.0..1.0)]);
        let flip = rng.random_bool(0.15);
        y.push(((i % 2) as u8) ^ u8::from(flip));
    }
    let ds = dataset(&rows, &y);
    let plan = Preprocessing::standardize_only();
    let grid = Grid::default().axis("k", &[1.0, 5.0]);
    let res = grid_search(&ModelSpec::new(ModelKind::Knn), &grid, &ds, 5, 3, &plan).unwrap();
    let k1 = kfold_cv(&ModelSpec::new(ModelKind::Knn).with("k", 1.0), &ds, 5, 3, &plan).unwrap();
    let k5 = kfold_cv(&ModelSpec::new(ModelKind::Knn).with("k", 5.0).with_seed(1), &ds, 5, 3, &plan).unwrap();
    assert!(k5.mean_accuracy > k1.mean_accuracy);
    assert_eq!(res.best.hyperparameters["k"], 5.0);
    assert_eq!(res.candidates[0].mean_cv_accuracy, Some(k1.mean_accuracy));
    assert_eq!(res.candidates[1].mean_cv_accuracy, Some(k5.mean_accuracy));
}

#[test]
fn grid_edge_cases() {
    let ds = small(1);
    let plan = Preprocessing::standardize_only();
    let template = ModelSpec::new(ModelKind::Knn).with("k", 3.0).with_seed(4);
    let single = grid_search(&template, &Grid::default(), &ds, 3, 0, &plan).unwrap();
    assert_eq!(single.best, template);

    let tied = grid_search(&template, &Grid::default().axis("k", &[7.0, 7.0]), &ds, 3, 0, &plan).unwrap();
    assert_eq!(tied.candidates[0].mean_cv_accuracy, tied.candidates[1].mean_cv_accuracy);
    assert_eq!(tied.best_index, 0);

    let partly_bad = grid_search(&template, &Grid::default().axis("k", &[0.0, 3.0]), &ds, 3, 0, &plan).unwrap();
    assert_eq!(partly_bad.best_index, 1);
    assert!(partly_bad.candidates[0].error.is_some());

    assert!(grid_search(&template, &Grid::default().axis("k", &[0.0]), &ds, 3, 0, &plan).is_err());
}

fn quick_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        cv_folds: 3,
        ..Default::default()
    };
    cfg.grids.insert(ModelKind::Rf, Grid::default().axis("n_trees", &[10.0, 20.0]));
    cfg.grids.insert(ModelKind::Gbt, Grid::default().axis("rounds", &[20.0]));
    cfg.grids.insert(ModelKind::Mlp, Grid::default().axis("epochs", &[20.0]));
    cfg
}

#[test]
fn full_experiment_report_contract() {
    let ds = small(2);
    let cfg = quick_config();
    let out = run_full_experiment(&cfg, &ds).unwrap();
    let r = &out.report;
    assert_eq!(r.tracks.len(), 2);
    let split_test = r.split.test_labels;
    for t in &r.tracks {
        assert_eq!(t.split_hash, r.split.hash);
        let order: Vec<ModelKind> = t.models.iter().map(|m| m.model).collect();
        assert_eq!(order, ModelKind::ALL.to_vec());
        assert_eq!(t.preprocessing.test_labels, split_test);
        assert_eq!(t.preprocessing.test_rows, split_test.total);
        for m in &t.models {
            assert_eq!(core_metrics(&m.test.cm).unwrap().accuracy, m.test.accuracy);
            let mean = m.folds.iter().map(|f| f.validation_accuracy).sum::<f64>() / m.folds.len() as f64;
            assert!((mean - m.mean_cv_accuracy).abs() < 1e-12);
            assert!(m.test.auc.is_some());
        }
    }
    let bal = r.track(Track::Balanced).unwrap();
    let imb = r.track(Track::Imbalanced).unwrap();
    assert_eq!(imb.preprocessing.smote_added, 0);
    // 72 benign / 48 ddos in train: SMOTE brings ddos up to 72
    assert_eq!(bal.preprocessing.smote_added, 24);
    assert_eq!(bal.preprocessing.train_rows, 144 - bal.preprocessing.lof_removed);
    assert!(r.notes.iter().any(|n| n.contains("SMOTE") && n.contains("LOF")));
}

#[test]
fn reruns_are_byte_identical_and_seed_changes_split() {
    let ds = small(3);
    let mut cfg = quick_config();
    cfg.models = vec![ModelKind::Knn, ModelKind::Rf];
    let a = run_full_experiment(&cfg, &ds).unwrap().report.to_json().unwrap();
    let b = run_full_experiment(&cfg, &ds).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
    cfg.seed = 1;
    let c = run_full_experiment(&cfg, &ds).unwrap().report;
    assert_ne!(c.split.hash, serde_json::from_str::<serde_json::Value>(&a).unwrap()["split"]["hash"]);
}

#[test]
fn track_filter_and_feature_selection() {
    let ds = small(4);
    let mut cfg = quick_config();
    cfg.tracks = vec![Track::Balanced];
    cfg.models = vec![ModelKind::Knn];
    cfg.feature_top_m = Some(2);
    let out = run_full_experiment(&cfg, &ds).unwrap();
    assert_eq!(out.report.tracks.len(), 1);
    assert_eq!(out.report.tracks[0].track, Track::Balanced);
    assert_eq!(out.report.tracks[0].preprocessing.selected_features.len(), 2);
    assert_eq!(out.tracks[0].selected_features.len(), 2);
}

#[test]
fn stage_errors_name_the_track() {
    let ds = small(5);
    let mut cfg = quick_config();
    cfg.models = vec![ModelKind::Knn];
    cfg.lof.k_neighbors = 500;
    let err = run_full_experiment(&cfg, &ds).unwrap_err().to_string();
    assert!(err.contains("balanced/"), "{err}");
}
