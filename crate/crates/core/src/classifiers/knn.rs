use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HyperReader, ModelSpec};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// Probability reported for an exact vote tie that the nearest neighbor
/// resolves to the negative class; keeps `label == (p >= 0.5)`.
pub const NEGATIVE_TIE_PROBABILITY: f64 = 0.5 - 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct KnnParams {
    pub k: usize,
}

impl KnnParams {
    pub const KEYS: &'static [&'static str] = &["k"];

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let h = HyperReader::new(spec, Self::KEYS)?;
        Ok(KnnParams {
            k: h.usize_or("k", 5, 1)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbors {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl NearestNeighbors {
    pub fn fit(params: &KnnParams, train: &Dataset) -> Self {
        NearestNeighbors {
            k: params.k.min(train.len()),
            x: train.x.clone(),
            y: train.y.clone(),
        }
    }

    /// Positive fraction among the k nearest training rows. Vote ties take
    /// the nearest neighbor's label.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let tree = KdTree::new(&self.x);
        (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let nn = tree.k_nearest(x.row(i), self.k, None);
                vote(&nn.iter().map(|n| self.y[n.index]).collect::<Vec<_>>())
            })
            .collect()
    }
}

/// Probability from neighbor labels ordered nearest first.
pub(crate) fn vote(labels: &[u8]) -> f64 {
    let k = labels.len();
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if 2 * pos == k && k > 0 {
        if labels[0] == 1 {
            0.5
        } else {
            NEGATIVE_TIE_PROBABILITY
        }
    } else {
        pos as f64 / k as f64
    }
}
