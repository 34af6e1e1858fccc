//! Dual-track experiment: the imbalanced track trains on the raw training
//! partition, the balanced track on a SMOTE-balanced and LOF-filtered copy.
//! Both tracks share one stratified split, tune every model by stratified
//! k-fold grid search and score the untouched test partition.
//!
//! Seed derivations (all from `ExperimentConfig::seed`):
//! - split and fold assignment: `seed`
//! - grid point `g`: model seed `seed + g`
//! - SMOTE inside CV fold `f`: `smote.seed + 1 + f`; on the full training
//!   partition: `smote.seed`

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ModelArtifact, ModelKind, ModelSpec, TrainedModel};
use crate::dataset::{stratified_split, CategoryEncoder, Dataset, LabelDistribution, SplitPair, BENIGN, DDOS};
use crate::error::{Error, Result, StageContext};
use crate::metrics::{self, MetricsReport, RocCurve};
use crate::preprocess::{apply_scaler, fit_scaler, remove_outliers, smote_with_parents, LofConfig, Scaler, SmoteConfig};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Imbalanced,
    Balanced,
}

impl Track {
    pub const ALL: [Track; 2] = [Track::Imbalanced, Track::Balanced];

    pub fn tag(self) -> &'static str {
        match self {
            Track::Imbalanced => "imbalanced",
            Track::Balanced => "balanced",
        }
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "imbalanced" => Ok(Track::Imbalanced),
            "balanced" => Ok(Track::Balanced),
            other => Err(Error::Config(format!("unknown track `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Cartesian hyperparameter grid. Points enumerate with the first axis
/// outermost, which is also the tie-break order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

impl Grid {
    pub fn axis(mut self, name: &str, values: &[f64]) -> Self {
        self.axes.push(GridAxis {
            name: name.to_string(),
            values: values.to_vec(),
        });
        self
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Rf => Grid::default().axis("n_trees", &[50.0, 100.0]),
            ModelKind::Gbt => Grid::default()
                .axis("rounds", &[50.0, 100.0])
                .axis("learning_rate", &[0.1, 0.3]),
            ModelKind::Knn => Grid::default().axis("k", &[3.0, 5.0, 7.0]),
            ModelKind::Mlp => Grid::default().axis("learning_rate", &[0.01, 0.001]),
            ModelKind::Svc => Grid::default().axis("lambda", &[1e-3, 1e-4]),
        }
    }

    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut points = vec![BTreeMap::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(axis.name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn is_empty(&self) -> bool {
        self.axes.iter().any(|a| a.values.is_empty())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split_ratio: f64,
    pub cv_folds: usize,
    pub seed: u64,
    pub models: Vec<ModelKind>,
    pub grids: BTreeMap<ModelKind, Grid>,
    pub smote: SmoteConfig,
    pub lof: LofConfig,
    pub tracks: Vec<Track>,
    /// Keep only the top-m features by random-forest importance.
    pub feature_top_m: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            split_ratio: 0.8,
            cv_folds: 5,
            seed: 0,
            models: ModelKind::ALL.to_vec(),
            grids: ModelKind::ALL
                .iter()
                .map(|&k| (k, Grid::default_for(k)))
                .collect(),
            smote: SmoteConfig::default(),
            lof: LofConfig::default(),
            tracks: Track::ALL.to_vec(),
            feature_top_m: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cv_folds < 2 {
            return Err(Error::Config(format!("cv_folds = {} must be >= 2", self.cv_folds)));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio = {} not in (0,1)", self.split_ratio)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models enabled".into()));
        }
        if self.tracks.is_empty() {
            return Err(Error::Config("no tracks enabled".into()));
        }
        if self.feature_top_m == Some(0) {
            return Err(Error::Config("feature_top_m must be positive".into()));
        }
        for &k in &self.models {
            match self.grids.get(&k) {
                Some(g) if !g.is_empty() => {
                    for axis in &g.axes {
                        if !k.hyperparameter_keys().contains(&axis.name.as_str()) {
                            return Err(Error::Config(format!(
                                "grid for {k} names unknown hyperparameter `{}`",
                                axis.name
                            )));
                        }
                    }
                }
                _ => return Err(Error::Config(format!("empty grid for enabled model {k}"))),
            }
        }
        Ok(())
    }

    /// Enabled models in report order.
    pub fn ordered_models(&self) -> Vec<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .filter(|k| self.models.contains(k))
            .collect()
    }

    pub fn ordered_tracks(&self) -> Vec<Track> {
        Track::ALL
            .into_iter()
            .filter(|t| self.tracks.contains(t))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Training-partition preprocessing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessing {
    pub smote: Option<SmoteConfig>,
    pub lof: Option<LofConfig>,
}

impl Preprocessing {
    pub fn standardize_only() -> Self {
        Preprocessing {
            smote: None,
            lof: None,
        }
    }

    pub fn for_track(track: Track, cfg: &ExperimentConfig) -> Self {
        match track {
            Track::Imbalanced => Self::standardize_only(),
            Track::Balanced => Preprocessing {
                smote: Some(cfg.smote.clone()),
                lof: Some(cfg.lof.clone()),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct PreparedTrain {
    pub dataset: Dataset,
    pub scaler: Scaler,
    pub smote_added: usize,
    pub lof_removed: usize,
}

/// SMOTE, then LOF, then a scaler fitted on the result. `seed_offset` is
/// added to the SMOTE seed.
pub fn prepare_training(train: &Dataset, plan: &Preprocessing, seed_offset: u64) -> Result<PreparedTrain> {
    let mut ds = train.clone();
    let mut smote_added = 0;
    let mut lof_removed = 0;
    if let Some(smote) = &plan.smote {
        let cfg = SmoteConfig {
            seed: smote.seed.wrapping_add(seed_offset),
            ..smote.clone()
        };
        let out = smote_with_parents(&ds, &cfg).stage("smote")?;
        smote_added = out.added();
        ds = out.dataset;
    }
    if let Some(lof) = &plan.lof {
        let out = remove_outliers(&ds, lof).stage("lof")?;
        lof_removed = out.removed.len();
        ds = out.dataset;
    }
    let scaler = fit_scaler(&ds).stage("standardize")?;
    let dataset = apply_scaler(&scaler, &ds).stage("standardize")?;
    Ok(PreparedTrain {
        dataset,
        scaler,
        smote_added,
        lof_removed,
    })
}

// ---------------------------------------------------------------------------
// Cross-validation and grid search
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub folds: Vec<FoldResult>,
}

/// Fold index per row: each class is shuffled under `seed` and dealt
/// round-robin, so every fold holds both classes.
pub fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; y.len()];
    for label in [BENIGN, DDOS] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        if idx.len() < folds {
            return Err(Error::invalid(format!(
                "class {label} has {} records; every one of {folds} folds needs one",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            fold_of[i] = j % folds;
        }
    }
    Ok(fold_of)
}

fn accuracy(y: &[u8], pred: &[u8]) -> f64 {
    let hits = y.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / y.len() as f64
}

/// Stratified k-fold accuracy. Preprocessing is refit on each fold's
/// training part; the held-out part only sees that fold's scaler.
pub fn kfold_cv(spec: &ModelSpec, train: &Dataset, folds: usize, seed: u64, plan: &Preprocessing) -> Result<CvResult> {
    let fold_of = stratified_folds(&train.y, folds, seed)?;
    let results: Vec<FoldResult> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<FoldResult> {
            let (fit_rows, val_rows): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| fold_of[i] != f);
            let prepared = prepare_training(&train.subset(&fit_rows), plan, 1 + f as u64)?;
            let model = classifiers::train(spec, &prepared.dataset)?;
            let fit_pred = model.predict_matrix(&prepared.dataset.x)?;
            let val = apply_scaler(&prepared.scaler, &train.subset(&val_rows))?;
            let val_pred = model.predict_matrix(&val.x)?;
            Ok(FoldResult {
                fold: f,
                train_accuracy: accuracy(&prepared.dataset.y, &fit_pred.labels),
                validation_accuracy: accuracy(&val.y, &val_pred.labels),
            })
        })
        .collect::<Result<_>>()?;
    let mean_accuracy = results.iter().map(|r| r.validation_accuracy).sum::<f64>() / folds as f64;
    Ok(CvResult {
        mean_accuracy,
        folds: results,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCandidate {
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub mean_cv_accuracy: Option<f64>,
    pub folds: Vec<FoldResult>,
    /// Why the candidate was skipped, if it failed.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ModelSpec,
    pub best_index: usize,
    pub candidates: Vec<GridCandidate>,
}

impl GridSearchResult {
    pub fn best_candidate(&self) -> &GridCandidate {
        &self.candidates[self.best_index]
    }
}

/// Exhaustive search; the highest mean CV accuracy wins and ties go to the
/// earliest grid point.
pub fn grid_search(
    template: &ModelSpec,
    grid: &Grid,
    train: &Dataset,
    folds: usize,
    seed: u64,
    plan: &Preprocessing,
) -> Result<GridSearchResult> {
    let points = grid.points();
    if grid.is_empty() || points.is_empty() {
        return Err(Error::Config(format!("empty grid for {}", template.kind)));
    }
    let specs: Vec<ModelSpec> = points
        .into_iter()
        .enumerate()
        .map(|(g, p)| {
            let mut s = template.clone();
            s.hyperparameters.extend(p);
            s.seed = template.seed.wrapping_add(g as u64);
            s
        })
        .collect();
    let candidates: Vec<GridCandidate> = specs
        .par_iter()
        .map(|spec| {
            let outcome = spec
                .validate()
                .and_then(|_| kfold_cv(spec, train, folds, seed, plan));
            match outcome {
                Ok(cv) => GridCandidate {
                    hyperparameters: spec.hyperparameters.clone(),
                    seed: spec.seed,
                    mean_cv_accuracy: Some(cv.mean_accuracy),
                    folds: cv.folds,
                    error: None,
                },
                Err(e) => {
                    warn!("{} grid point {:?} skipped: {e}", spec.kind, spec.hyperparameters);
                    GridCandidate {
                        hyperparameters: spec.hyperparameters.clone(),
                        seed: spec.seed,
                        mean_cv_accuracy: None,
                        folds: Vec::new(),
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (g, c) in candidates.iter().enumerate() {
        if let Some(acc) = c.mean_cv_accuracy {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((g, acc));
            }
        }
    }
    let Some((best_index, _)) = best else {
        let first = candidates
            .first()
            .and_then(|c| c.error.clone())
            .unwrap_or_default();
        return Err(Error::invalid(format!(
            "every {} grid point failed; first error: {first}",
            template.kind
        )));
    };
    Ok(GridSearchResult {
        best: specs[best_index].clone(),
        best_index,
        candidates,
    })
}

// ---------------------------------------------------------------------------
// Tracks and reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model: ModelKind,
    pub chosen_hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub training_accuracy: f64,
    pub mean_cv_accuracy: f64,
    pub folds: Vec<FoldResult>,
    pub grid: Vec<GridCandidate>,
    pub test: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingSummary {
    pub steps: Vec<String>,
    pub smote_added: usize,
    pub lof_removed: usize,
    pub train_rows: usize,
    pub train_labels: LabelDistribution,
    pub test_rows: usize,
    pub test_labels: LabelDistribution,
    pub constant_features: Vec<String>,
    pub selected_features: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub track: Track,
    pub split_hash: String,
    pub preprocessing: PreprocessingSummary,
    pub models: Vec<ModelEntry>,
}

impl TrackReport {
    pub fn entry(&self, kind: ModelKind) -> Option<&ModelEntry> {
        self.models.iter().find(|m| m.model == kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub provenance: String,
    pub rows: usize,
    pub features: usize,
    pub labels: LabelDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub ratio: f64,
    pub seed: u64,
    pub hash: String,
    pub train_labels: LabelDistribution,
    pub test_labels: LabelDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    /// Set by the caller; the library never reads the clock.
    pub generated_at: Option<String>,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub split: SplitSummary,
    pub notes: Vec<String>,
    pub tracks: Vec<TrackReport>,
}

impl ExperimentReport {
    pub fn track(&self, track: Track) -> Option<&TrackReport> {
        self.tracks.iter().find(|t| t.track == track)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fixed-width model x track table of test accuracy and AUC.
    pub fn summary_table(&self) -> String {
        let mut s = format!("{:<12}{:<7}{:>10}{:>10}{:>10}\n", "track", "model", "train", "test_acc", "auc");
        for t in &self.tracks {
            for m in &t.models {
                let auc = m.test.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
                s.push_str(&format!(
                    "{:<12}{:<7}{:>10.4}{:>10.4}{:>10}\n",
                    t.track.tag(),
                    m.model.label(),
                    m.training_accuracy,
                    m.test.accuracy,
                    auc
                ));
            }
        }
        s
    }
}

/// A trained model of one track with everything needed to score raw rows.
#[derive(Clone, Debug)]
pub struct TrainedEntry {
    pub kind: ModelKind,
    pub model: TrainedModel,
    pub roc: Option<RocCurve>,
}

#[derive(Clone, Debug)]
pub struct TrackOutcome {
    pub report: TrackReport,
    pub scaler: Scaler,
    pub selected_features: Vec<usize>,
    pub models: Vec<TrainedEntry>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub tracks: Vec<TrackOutcome>,
}

fn pipeline_steps(track: Track) -> Vec<String> {
    let mut steps = vec!["stratified split".to_string()];
    if track == Track::Balanced {
        steps.push("SMOTE (train only)".into());
        steps.push("LOF outlier removal (train only)".into());
    }
    steps.push("z-score scaler fitted on train, applied to train and test".into());
    steps
}

/// Columns kept by importance-based selection, ascending.
fn select_features(train: &Dataset, plan: &Preprocessing, cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    let d = train.n_features();
    let m = match cfg.feature_top_m {
        Some(m) if m < d => m,
        _ => return Ok((0..d).collect()),
    };
    let prepared = prepare_training(train, plan, 0)?;
    let rf = classifiers::train(&ModelSpec::new(ModelKind::Rf).with_seed(cfg.seed), &prepared.dataset)?;
    let imp = rf.feature_importance().expect("forest has importances");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    let mut keep = order[..m].to_vec();
    keep.sort_unstable();
    Ok(keep)
}

pub fn run_track(track: Track, split: &SplitPair, cfg: &ExperimentConfig) -> Result<TrackOutcome> {
    cfg.validate()?;
    let tag = track.tag();
    let plan = Preprocessing::for_track(track, cfg);
    let selected = select_features(&split.train, &plan, cfg).stage(&format!("{tag}/feature-selection"))?;
    let train = split.train.select_features(&selected);
    let test = split.test.select_features(&selected);

    let prepared = prepare_training(&train, &plan, 0).stage(&format!("{tag}/preprocess"))?;
    let test_proc = apply_scaler(&prepared.scaler, &test).stage(&format!("{tag}/standardize-test"))?;
    assert_eq!(test_proc.len(), split.test.len());
    assert_eq!(test_proc.y, split.test.y);

    let mut entries = Vec::new();
    let mut trained = Vec::new();
    for kind in cfg.ordered_models() {
        let stage = format!("{tag}/{kind}");
        let template = ModelSpec::new(kind).with_seed(cfg.seed);
        let grid = &cfg.grids[&kind];
        let search = grid_search(&template, grid, &train, cfg.cv_folds, cfg.seed, &plan).stage(&format!("{stage}/grid-search"))?;
        let model = classifiers::train(&search.best, &prepared.dataset).stage(&format!("{stage}/train"))?;
        let train_pred = model.predict_matrix(&prepared.dataset.x).stage(&stage)?;
        let test_pred = model.predict_matrix(&test_proc.x).stage(&stage)?;
        let (test_metrics, roc) =
            metrics::evaluate(&test_proc.y, &test_pred.labels, &test_pred.positive_probabilities).stage(&format!("{stage}/evaluate"))?;
        let best = search.best_candidate();
        entries.push(ModelEntry {
            model: kind,
            chosen_hyperparameters: search.best.hyperparameters.clone(),
            seed: search.best.seed,
            training_accuracy: accuracy(&prepared.dataset.y, &train_pred.labels),
            mean_cv_accuracy: best.mean_cv_accuracy.expect("best candidate succeeded"),
            folds: best.folds.clone(),
            grid: search.candidates.clone(),
            test: test_metrics,
        });
        trained.push(TrainedEntry { kind, model, roc });
    }

    let names = &split.train.feature_names;
    let report = TrackReport {
        track,
        split_hash: split.split_hash(),
        preprocessing: PreprocessingSummary {
            steps: pipeline_steps(track),
            smote_added: prepared.smote_added,
            lof_removed: prepared.lof_removed,
            train_rows: prepared.dataset.len(),
            train_labels: prepared.dataset.label_distribution(),
            test_rows: test_proc.len(),
            test_labels: test_proc.label_distribution(),
            constant_features: prepared
                .scaler
                .constant
                .iter()
                .enumerate()
                .filter(|(_, &c)| c)
                .map(|(j, _)| names[selected[j]].clone())
                .collect(),
            selected_features: selected.iter().map(|&j| names[j].clone()).collect(),
        },
        models: entries,
    };
    Ok(TrackOutcome {
        report,
        scaler: prepared.scaler,
        selected_features: selected,
        models: trained,
    })
}

fn notes() -> Vec<String> {
    vec![
        "pipeline order: split -> SMOTE(train) -> LOF(train) -> scaler fitted on train -> transform train and test; the imbalanced track skips SMOTE and LOF".into(),
        "preprocessing is refit inside every cross-validation fold; validation folds only see the fold scaler".into(),
        "SVC is a linear hinge-loss model with Platt-scaled probabilities".into(),
        "XGB is second-order gradient boosting with L2 leaf regularization".into(),
        "seeds: split/folds = seed, grid point g = seed + g, SMOTE in fold f = smote.seed + 1 + f".into(),
    ]
}

pub fn run_full_experiment(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let split = stratified_split(ds, cfg.split_ratio, cfg.seed).stage("split")?;
    let tracks: Vec<TrackOutcome> = cfg
        .ordered_tracks()
        .into_iter()
        .map(|t| run_track(t, &split, cfg))
        .collect::<Result<_>>()?;
    let report = ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        generated_at: None,
        config: cfg.clone(),
        dataset: DatasetSummary {
            provenance: ds.provenance.clone(),
            rows: ds.len(),
            features: ds.n_features(),
            labels: ds.label_distribution(),
        },
        split: SplitSummary {
            ratio: split.ratio,
            seed: split.seed,
            hash: split.split_hash(),
            train_labels: split.train.label_distribution(),
            test_labels: split.test.label_distribution(),
        },
        notes: notes(),
        tracks: tracks.iter().map(|t| t.report.clone()).collect(),
    };
    Ok(ExperimentOutcome { report, tracks })
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Raw-input context needed to save scoring artifacts alongside a report.
pub struct ArtifactContext<'a> {
    pub feature_names: &'a [String],
    pub label_column: &'a str,
    pub encoder: &'a CategoryEncoder,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `report.json`, the per model-track plot data
/// (`roc_*.csv`, `validation_curve_*.csv`, `confusion_*.csv`) and, given a
/// context, `category_mapping.json` plus one model file per model-track
/// under `models/`. Returns the written paths.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path, artifacts: Option<ArtifactContext<'_>>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e: std::io::Error| Error::io(p, e)
    };

    let report_path = dir.join("report.json");
    let mut w = create(&report_path)?;
    w.write_all(outcome.report.to_json()?.as_bytes()).map_err(io(&report_path))?;
    w.write_all(b"\n").map_err(io(&report_path))?;
    w.flush().map_err(io(&report_path))?;
    written.push(report_path);

    for (track, report) in outcome.tracks.iter().zip(&outcome.report.tracks) {
        let t = report.track.tag();
        for (entry, trained) in report.models.iter().zip(&track.models) {
            let m = entry.model.tag();
            if let Some(roc) = &trained.roc {
                let p = dir.join(format!("roc_{m}_{t}.csv"));
                let mut w = create(&p)?;
                roc.write_csv(&mut w).and_then(|_| w.flush()).map_err(io(&p))?;
                written.push(p);
            }
            let p = dir.join(format!("validation_curve_{m}_{t}.csv"));
            let mut w = create(&p)?;
            let mut body = String::from("fold,train_acc,val_acc\n");
            for f in &entry.folds {
                body.push_str(&format!("{},{},{}\n", f.fold, f.train_accuracy, f.validation_accuracy));
            }
            w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io(&p))?;
            written.push(p);

            let p = dir.join(format!("confusion_{m}_{t}.csv"));
            let mut w = create(&p)?;
            let cm = &entry.test.cm;
            let body = format!(
                "actual,predicted_0,predicted_1\n0,{},{}\n1,{},{}\n",
                cm.tn, cm.fp, cm.fn_, cm.tp
            );
            w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io(&p))?;
            written.push(p);
        }
    }

    if let Some(ctx) = artifacts {
        let p = dir.join("category_mapping.json");
        let mut w = create(&p)?;
        serde_json::to_writer_pretty(&mut w, ctx.encoder)?;
        w.flush().map_err(io(&p))?;
        written.push(p);

        let models_dir = dir.join("models");
        fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
        for track in &outcome.tracks {
            for trained in &track.models {
                let artifact = ModelArtifact::new(
                    trained.model.clone(),
                    ctx.feature_names.to_vec(),
                    ctx.label_column,
                    ctx.encoder.clone(),
                    track.selected_features.clone(),
                    Some(track.scaler.clone()),
                );
                let p = models_dir.join(format!("{}_{}.json", trained.kind.tag(), track.report.track.tag()));
                artifact.save(&p)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}
