//! Five binary classifiers behind one train / predict interface.
//!
//! Every model yields a positive-class probability; labels are that
//! probability thresholded at 0.5.

pub mod forest;
pub mod gbt;
pub mod knn;
pub mod mlp;
pub mod svc;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryEncoder, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::Scaler;

pub use forest::{ForestParams, RandomForest};
pub use gbt::{BoostParams, GradientBoosting};
pub use knn::{KnnParams, NearestNeighbors};
pub use mlp::{gradient_check, Mlp, MlpParams};
pub use svc::{LinearSvc, SvcParams};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Svc,
    Knn,
    Mlp,
    Gbt,
}

impl ModelKind {
    /// Order used in every report table.
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Rf,
        ModelKind::Svc,
        ModelKind::Knn,
        ModelKind::Mlp,
        ModelKind::Gbt,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Svc => "svc",
            ModelKind::Knn => "knn",
            ModelKind::Mlp => "mlp",
            ModelKind::Gbt => "gbt",
        }
    }

    /// Column header in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Rf => "RF",
            ModelKind::Svc => "SVC",
            ModelKind::Knn => "KNN",
            ModelKind::Mlp => "MLP",
            ModelKind::Gbt => "XGB",
        }
    }

    pub fn hyperparameter_keys(self) -> &'static [&'static str] {
        match self {
            ModelKind::Rf => ForestParams::KEYS,
            ModelKind::Svc => SvcParams::KEYS,
            ModelKind::Knn => KnnParams::KEYS,
            ModelKind::Mlp => MlpParams::KEYS,
            ModelKind::Gbt => BoostParams::KEYS,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random_forest" => Ok(ModelKind::Rf),
            "svc" | "svm" => Ok(ModelKind::Svc),
            "knn" => Ok(ModelKind::Knn),
            "mlp" => Ok(ModelKind::Mlp),
            "gbt" | "xgb" => Ok(ModelKind::Gbt),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Kind-specific settings; unset keys take the documented defaults.
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            hyperparameters: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Check every hyperparameter against the kind's rules.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Rf => ForestParams::from_spec(self).map(drop),
            ModelKind::Svc => SvcParams::from_spec(self).map(drop),
            ModelKind::Knn => KnnParams::from_spec(self).map(drop),
            ModelKind::Mlp => MlpParams::from_spec(self).map(drop),
            ModelKind::Gbt => BoostParams::from_spec(self).map(drop),
        }
    }
}

/// Typed access to a spec's hyperparameter map.
pub(crate) struct HyperReader<'a> {
    spec: &'a ModelSpec,
}

impl<'a> HyperReader<'a> {
    pub fn new(spec: &'a ModelSpec, keys: &[&str]) -> Result<Self> {
        if let Some(k) = spec
            .hyperparameters
            .keys()
            .find(|k| !keys.contains(&k.as_str()))
        {
            return Err(Self::err(spec, format!("unknown key `{k}`")));
        }
        Ok(HyperReader { spec })
    }

    fn err(spec: &ModelSpec, message: String) -> Error {
        Error::Hyperparameter {
            kind: spec.kind.tag().to_string(),
            message,
        }
    }

    fn integer(&self, key: &str, min: usize) -> Result<Option<usize>> {
        match self.spec.hyperparameters.get(key) {
            None => Ok(None),
            Some(&v) if v.fract() == 0.0 && v >= min as f64 && v <= u32::MAX as f64 => {
                Ok(Some(v as usize))
            }
            Some(&v) => Err(Self::err(
                self.spec,
                format!("`{key}` = {v} must be an integer >= {min}"),
            )),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        Ok(self.integer(key, min)?.unwrap_or(default))
    }

    pub fn opt_usize(&self, key: &str, min: usize) -> Result<Option<usize>> {
        self.integer(key, min)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.spec.hyperparameters.get(key) {
            None => Ok(default),
            Some(&0.0) => Ok(false),
            Some(&1.0) => Ok(true),
            Some(&v) => Err(Self::err(self.spec, format!("`{key}` = {v} must be 0 or 1"))),
        }
    }

    /// Real in `(lo, hi]`, or `[lo, hi]` when `lo_inclusive`.
    pub fn f64_in(&self, key: &str, default: f64, lo: f64, hi: f64, lo_inclusive: bool) -> Result<f64> {
        let v = match self.spec.hyperparameters.get(key) {
            None => return Ok(default),
            Some(&v) => v,
        };
        let lo_ok = if lo_inclusive { v >= lo } else { v > lo };
        if v.is_nan() || !lo_ok || v > hi {
            return Err(Self::err(self.spec, format!("`{key}` = {v} out of range")));
        }
        Ok(v)
    }
}

/// Learned state, one variant per model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelState {
    Rf(RandomForest),
    Svc(LinearSvc),
    Knn(NearestNeighbors),
    Mlp(Mlp),
    Gbt(GradientBoosting),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    pub state: ModelState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: Vec<u8>,
    pub positive_probabilities: Vec<f64>,
}

impl PredictionSet {
    fn from_probabilities(mut probs: Vec<f64>) -> Self {
        probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
        let labels = probs
            .iter()
            .map(|&p| u8::from(p >= DECISION_THRESHOLD))
            .collect();
        PredictionSet {
            labels,
            positive_probabilities: probs,
        }
    }
}

pub fn train(spec: &ModelSpec, train: &Dataset) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let dist = train.label_distribution();
    let single_class = dist.benign_count == 0 || dist.ddos_count == 0;
    if single_class && matches!(spec.kind, ModelKind::Gbt | ModelKind::Svc | ModelKind::Mlp) {
        return Err(Error::invalid(format!(
            "{} needs both classes in the training set",
            spec.kind.label()
        )));
    }
    let state = match spec.kind {
        ModelKind::Rf => ModelState::Rf(RandomForest::fit(
            &ForestParams::from_spec(spec)?,
            train,
            spec.seed,
        )),
        ModelKind::Gbt => {
            ModelState::Gbt(GradientBoosting::fit(&BoostParams::from_spec(spec)?, train))
        }
        ModelKind::Knn => {
            ModelState::Knn(NearestNeighbors::fit(&KnnParams::from_spec(spec)?, train))
        }
        ModelKind::Mlp => ModelState::Mlp(Mlp::fit(&MlpParams::from_spec(spec)?, train, spec.seed)),
        ModelKind::Svc => {
            ModelState::Svc(LinearSvc::fit(&SvcParams::from_spec(spec)?, train, spec.seed))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_features: train.n_features(),
        state,
    })
}

impl TrainedModel {
    pub fn predict_matrix(&self, x: &Matrix) -> Result<PredictionSet> {
        if x.cols() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                actual: x.cols(),
            });
        }
        let probs = match &self.state {
            ModelState::Rf(m) => m.predict_proba(x),
            ModelState::Svc(m) => m.predict_proba(x),
            ModelState::Knn(m) => m.predict_proba(x),
            ModelState::Mlp(m) => m.predict_proba(x),
            ModelState::Gbt(m) => m.predict_proba(x),
        };
        Ok(PredictionSet::from_probabilities(probs))
    }

    /// Per-feature importance where the model defines one (random forest).
    pub fn feature_importance(&self) -> Option<&[f64]> {
        match &self.state {
            ModelState::Rf(m) => Some(&m.feature_importance),
            _ => None,
        }
    }
}

pub fn predict(model: &TrainedModel, ds: &Dataset) -> Result<PredictionSet> {
    model.predict_matrix(&ds.x)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub const MODEL_FORMAT: &str = "ddos-detect-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained model together with the preprocessing needed to score raw
/// (ordinal-encoded) feature rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    /// Feature names of the raw input, before selection.
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub encoder: CategoryEncoder,
    /// Raw-input columns kept by feature selection, in order.
    pub selected_features: Vec<usize>,
    pub scaler: Option<Scaler>,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub fn new(
        model: TrainedModel,
        feature_names: Vec<String>,
        label_column: &str,
        encoder: CategoryEncoder,
        selected_features: Vec<usize>,
        scaler: Option<Scaler>,
    ) -> Self {
        ModelArtifact {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            kind: model.spec.kind,
            feature_names,
            label_column: label_column.to_string(),
            encoder,
            selected_features,
            scaler,
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f))
    }

    pub fn from_reader<R: std::io::Read>(r: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(r)?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(MODEL_FORMAT) => {}
            other => {
                return Err(Error::ModelFile(format!(
                    "unrecognized format tag {other:?}"
                )))
            }
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            other => {
                return Err(Error::ModelFile(format!(
                    "unsupported format version {other:?}"
                )))
            }
        }
        let artifact: ModelArtifact = serde_json::from_value(value)?;
        if artifact.kind != artifact.model.spec.kind {
            return Err(Error::ModelFile("kind tag disagrees with model state".into()));
        }
        Ok(artifact)
    }

    /// Score rows laid out like the raw training input.
    pub fn predict_raw(&self, x: &Matrix) -> Result<PredictionSet> {
        if x.cols() != self.feature_names.len() {
            return Err(Error::ArityMismatch {
                expected: self.feature_names.len(),
                actual: x.cols(),
            });
        }
        let mut x = x.select_cols(&self.selected_features);
        if let Some(s) = &self.scaler {
            for i in 0..x.rows() {
                s.transform_row(x.row_mut(i));
            }
        }
        self.model.predict_matrix(&x)
    }
}
