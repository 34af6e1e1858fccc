//! Flat TOML run configuration mirroring [`ExperimentConfig`].
//!
//! ```toml
//! split_ratio = 0.8
//! cv_folds = 5
//! seed = 0
//! models = ["rf", "knn"]
//! tracks = ["balanced"]
//! smote_k = 5
//! smote_target_ratio = 1.0
//! smote_seed = 0
//! lof_k = 20
//! lof_threshold = 1.5
//! feature_top_m = 10
//! label_column = "label"
//! grid_knn_k = [1, 5]
//! grid_gbt_learning_rate = [0.1]
//! ```
//!
//! A `grid_<model>_<hyperparameter>` key replaces that model's whole
//! default grid the first time one of its axes appears.

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::classifiers::ModelKind;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Grid};

/// Parsed config file: the experiment settings plus CLI-only keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    pub experiment: ExperimentConfig,
    pub label_column: Option<String>,
}

fn bad(key: &str, want: &str) -> Error {
    Error::Config(format!("`{key}` must be {want}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        _ => Err(bad(key, "a number")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(bad(key, "a non-negative integer")),
    }
}

fn as_strings(key: &str, v: &Value) -> Result<Vec<String>> {
    let Value::Array(items) = v else {
        return Err(bad(key, "an array of strings"));
    };
    items
        .iter()
        .map(|i| i.as_str().map(str::to_string).ok_or_else(|| bad(key, "an array of strings")))
        .collect()
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut out = FileConfig::default();
        let cfg = &mut out.experiment;
        let mut replaced: BTreeSet<ModelKind> = BTreeSet::new();
        for (key, v) in &table {
            match key.as_str() {
                "split_ratio" => cfg.split_ratio = as_f64(key, v)?,
                "cv_folds" => cfg.cv_folds = as_u64(key, v)? as usize,
                "seed" => cfg.seed = as_u64(key, v)?,
                "models" => {
                    cfg.models = as_strings(key, v)?
                        .iter()
                        .map(|s| s.parse::<ModelKind>())
                        .collect::<Result<_>>()?
                }
                "tracks" => {
                    cfg.tracks = as_strings(key, v)?
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_>>()?
                }
                "smote_k" => cfg.smote.k_neighbors = as_u64(key, v)? as usize,
                "smote_target_ratio" => cfg.smote.target_ratio = as_f64(key, v)?,
                "smote_seed" => cfg.smote.seed = as_u64(key, v)?,
                "lof_k" => cfg.lof.k_neighbors = as_u64(key, v)? as usize,
                "lof_threshold" => cfg.lof.threshold = as_f64(key, v)?,
                "feature_top_m" => cfg.feature_top_m = Some(as_u64(key, v)? as usize),
                "label_column" => {
                    out.label_column = Some(v.as_str().ok_or_else(|| bad(key, "a string"))?.to_string())
                }
                k if k.starts_with("grid_") => {
                    let rest = &k["grid_".len()..];
                    let (model, param) = rest
                        .split_once('_')
                        .ok_or_else(|| Error::Config(format!("grid key `{k}` needs a model and a hyperparameter")))?;
                    let kind: ModelKind = model.parse()?;
                    if !kind.hyperparameter_keys().contains(&param) {
                        return Err(Error::Config(format!("{kind} has no hyperparameter `{param}`")));
                    }
                    let Value::Array(items) = v else {
                        return Err(bad(k, "an array of numbers"));
                    };
                    let values = items.iter().map(|i| as_f64(k, i)).collect::<Result<Vec<_>>>()?;
                    let grid = cfg.grids.entry(kind).or_default();
                    if replaced.insert(kind) {
                        *grid = Grid::default();
                    }
                    *grid = std::mem::take(grid).axis(param, &values);
                }
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
