use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_classifier, CartParams, Tree};
use super::{HyperReader, ModelSpec};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Defaults to floor(sqrt(d)), at least 1.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl ForestParams {
    pub const KEYS: &'static [&'static str] = &[
        "n_trees",
        "max_depth",
        "min_samples_split",
        "max_features",
        "bootstrap",
    ];

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let h = HyperReader::new(spec, Self::KEYS)?;
        Ok(ForestParams {
            n_trees: h.usize_or("n_trees", 100, 1)?,
            max_depth: h.opt_usize("max_depth", 0)?,
            min_samples_split: h.usize_or("min_samples_split", 2, 2)?,
            max_features: h.opt_usize("max_features", 1)?,
            bootstrap: h.bool_or("bootstrap", true)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    /// Mean impurity decrease per feature, normalized to sum 1 (all zeros
    /// when no tree split).
    pub feature_importance: Vec<f64>,
}

impl RandomForest {
    pub fn fit(params: &ForestParams, train: &Dataset, seed: u64) -> Self {
        let n = train.len();
        let d = train.n_features();
        let mtry = params
            .max_features
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .min(d.max(1));
        let cart = CartParams {
            max_depth: params.max_depth.unwrap_or(usize::MAX),
            min_samples_split: params.min_samples_split,
            max_features: mtry,
        };
        // tree t draws from its own stream seeded with seed + t
        let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut imp = vec![0.0; d];
                let tree = grow_classifier(&train.x, &train.y, samples, &cart, &mut rng, &mut imp);
                let total: f64 = imp.iter().sum();
                if total > 0.0 {
                    imp.iter_mut().for_each(|v| *v /= total);
                }
                (tree, imp)
            })
            .collect();
        let mut feature_importance = vec![0.0; d];
        for (_, imp) in &grown {
            for (a, b) in feature_importance.iter_mut().zip(imp) {
                *a += b;
            }
        }
        let total: f64 = feature_importance.iter().sum();
        if total > 0.0 {
            feature_importance.iter_mut().for_each(|v| *v /= total);
        }
        RandomForest {
            trees: grown.into_iter().map(|(t, _)| t).collect(),
            feature_importance,
        }
    }

    /// Fraction of trees voting positive. A tree votes positive when its
    /// leaf's positive fraction is at least one half.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let n_trees = self.trees.len() as f64;
        (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let votes = self
                    .trees
                    .iter()
                    .filter(|t| t.predict(row) >= 0.5)
                    .count();
                votes as f64 / n_trees
            })
            .collect()
    }
}
