//! Linear soft-margin classifier trained by stochastic subgradient descent
//! on the L2-regularized hinge loss, with Platt-scaled probabilities.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbt::sigmoid;
use super::{HyperReader, ModelSpec};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;

const PLATT_FOLDS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct SvcParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl SvcParams {
    pub const KEYS: &'static [&'static str] = &["lambda", "epochs"];

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let h = HyperReader::new(spec, Self::KEYS)?;
        Ok(SvcParams {
            lambda: h.f64_in("lambda", 1e-4, 0.0, f64::INFINITY, false)?,
            epochs: h.usize_or("epochs", 20, 1)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvc {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Platt sigmoid: P(y=1 | f) = 1 / (1 + exp(a f + b)).
    pub platt_a: f64,
    pub platt_b: f64,
}

/// Hinge-loss hyperplane over the listed rows. The bias is handled as an
/// extra constant feature and regularized with the weights.
fn fit_hyperplane(x: &Matrix, y: &[u8], rows: &[usize], params: &SvcParams, seed: u64) -> (Vec<f64>, f64) {
    let d = x.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = rows.to_vec();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let target = if y[i] == 1 { 1.0 } else { -1.0 };
            let margin = target * (dot(&w, row) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < 1.0 {
                for (wv, xv) in w.iter_mut().zip(row) {
                    *wv += eta * target * xv;
                }
                b += eta * target;
            }
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
        }
    }
    (w, b)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Platt's sigmoid fit with regularized targets, by Newton's method with
/// backtracking line search.
pub fn fit_platt(decisions: &[f64], y: &[u8]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&l| l == 1).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = y.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let fapb = f * a + b;
                if fapb >= 0.0 {
                    t * fapb + (-fapb).exp().ln_1p()
                } else {
                    (t - 1.0) * fapb + fapb.exp().ln_1p()
                }
            })
            .sum()
    };
    let (min_step, sigma, eps) = (1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let fapb = f * a + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

impl LinearSvc {
    pub fn fit(params: &SvcParams, train: &Dataset, seed: u64) -> Self {
        let n = train.len();
        let all: Vec<usize> = (0..n).collect();

        // out-of-fold decision values for the calibration sigmoid
        let mut fold_of = vec![0usize; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut enough = true;
        for label in [0u8, 1] {
            let mut idx = train.class_indices(label);
            enough &= idx.len() >= PLATT_FOLDS;
            idx.shuffle(&mut rng);
            for (j, &i) in idx.iter().enumerate() {
                fold_of[i] = j % PLATT_FOLDS;
            }
        }
        let mut decisions = vec![0.0; n];
        if enough {
            for fold in 0..PLATT_FOLDS {
                let fit_rows: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] != fold).collect();
                let (w, b) = fit_hyperplane(&train.x, &train.y, &fit_rows, params, seed.wrapping_add(1 + fold as u64));
                for i in all.iter().copied().filter(|&i| fold_of[i] == fold) {
                    decisions[i] = dot(&w, train.x.row(i)) + b;
                }
            }
        }
        let (weights, bias) = fit_hyperplane(&train.x, &train.y, &all, params, seed);
        if !enough {
            for i in 0..n {
                decisions[i] = dot(&weights, train.x.row(i)) + bias;
            }
        }
        let (platt_a, platt_b) = fit_platt(&decisions, &train.y);
        LinearSvc {
            weights,
            bias,
            platt_a,
            platt_b,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows()
            .map(|r| sigmoid(-(self.platt_a * self.decision(r) + self.platt_b)))
            .collect()
    }
}
