use serde::{Deserialize, Serialize};

use super::tree::{grow_newton, presort, NewtonParams, Tree};
use super::{HyperReader, ModelSpec};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl BoostParams {
    pub const KEYS: &'static [&'static str] = &[
        "rounds",
        "max_depth",
        "learning_rate",
        "lambda",
        "min_child_weight",
    ];

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let h = HyperReader::new(spec, Self::KEYS)?;
        Ok(BoostParams {
            rounds: h.usize_or("rounds", 100, 1)?,
            max_depth: h.usize_or("max_depth", 3, 1)?,
            learning_rate: h.f64_in("learning_rate", 0.1, 0.0, 1.0, false)?,
            lambda: h.f64_in("lambda", 1.0, 0.0, f64::INFINITY, true)?,
            min_child_weight: h.f64_in("min_child_weight", 1.0, 0.0, f64::INFINITY, true)?,
        })
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean logistic loss of margins against binary labels.
pub fn logistic_loss(margins: &[f64], y: &[u8]) -> f64 {
    let s: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &t)| if t == 1 { softplus(-m) } else { softplus(m) })
        .sum();
    s / y.len() as f64
}

/// Additive trees on logistic loss with Newton leaf weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    /// Initial margin: log-odds of the training positive rate.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training loss before the first round and after each round.
    pub training_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(params: &BoostParams, train: &Dataset) -> Self {
        let n = train.len();
        let pos = train.y.iter().filter(|&&v| v == 1).count() as f64;
        let rate = (pos / n as f64).clamp(1e-12, 1.0 - 1e-12);
        let base_score = (rate / (1.0 - rate)).ln();
        let sorted = presort(&train.x);
        let tree_params = NewtonParams {
            max_depth: params.max_depth,
            lambda: params.lambda,
            min_child_weight: params.min_child_weight,
            learning_rate: params.learning_rate,
        };

        let mut margins = vec![base_score; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.rounds);
        let mut training_loss = vec![logistic_loss(&margins, &train.y)];
        for _ in 0..params.rounds {
            for i in 0..n {
                let p = sigmoid(margins[i]);
                grad[i] = p - train.y[i] as f64;
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let tree = grow_newton(&train.x, &sorted, &grad, &hess, &tree_params);
            for (i, m) in margins.iter_mut().enumerate() {
                *m += tree.predict(train.x.row(i));
            }
            trees.push(tree);
            training_loss.push(logistic_loss(&margins, &train.y));
        }
        GradientBoosting {
            base_score,
            trees,
            training_loss,
        }
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| sigmoid(self.margin(r))).collect()
    }
}
