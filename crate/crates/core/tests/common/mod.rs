//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use ddos_core::{Dataset, Matrix};

pub fn dataset(rows: &[Vec<f64>], y: &[u8]) -> Dataset {
    let d = rows.first().map_or(1, Vec::len);
    let x = if rows.is_empty() {
        Matrix::with_cols(d)
    } else {
        Matrix::from_rows(rows).unwrap()
    };
    Dataset::new((0..d).map(|j| format!("c{j}")).collect(), x, y.to_vec(), "test").unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Indices of the `k` nearest rows to `q`, ordered by distance then index.
pub fn brute_neighbors(x: &Matrix, q: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&i| Some(i) != skip)
        .map(|i| (dist(x.row(i), q), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Textbook LOF with exactly `k` neighbors per point.
pub fn brute_lof(x: &Matrix, k: usize) -> Vec<f64> {
    let n = x.rows();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| brute_neighbors(x, x.row(i), k, Some(i))).collect();
    let kdist: Vec<f64> = (0..n).map(|i| dist(x.row(i), x.row(nbrs[i][k - 1]))).collect();
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let mut total = 0.0;
            for &o in &nbrs[p] {
                total += f64::max(dist(x.row(p), x.row(o)), kdist[o]);
            }
            let mean = total / k as f64;
            if mean == 0.0 {
                1e10
            } else {
                1.0 / mean
            }
        })
        .collect();
    (0..n)
        .map(|p| nbrs[p].iter().map(|&o| lrd[o]).sum::<f64>() / (k as f64 * lrd[p]))
        .collect()
}

/// Mann-Whitney concordance: P(score_pos > score_neg) + 0.5 P(equal).
pub fn pairwise_auc(y: &[u8], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

pub struct HandMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub mcc: f64,
}

/// Metrics from their textbook definitions, with 0 for 0/0.
pub fn hand_metrics(y: &[u8], p: &[u8]) -> HandMetrics {
    let mut c = [[0u64; 2]; 2];
    for (&a, &b) in y.iter().zip(p) {
        c[a as usize][b as usize] += 1;
    }
    let (tn, fp, fn_, tp) = (c[0][0], c[0][1], c[1][0], c[1][1]);
    let n = y.len() as f64;
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = div(tp as f64, (tp + fp) as f64);
    let recall = div(tp as f64, (tp + fn_) as f64);
    let f1 = div(2.0 * precision * recall, precision + recall);
    let po = (tp + tn) as f64 / n;
    let pe = ((tp + fp) as f64 * (tp + fn_) as f64 + (tn + fn_) as f64 * (tn + fp) as f64) / (n * n);
    let kappa = div(po - pe, 1.0 - pe);
    let mcc_den = ((tp + fp) as f64 * (tp + fn_) as f64 * (tn + fp) as f64 * (tn + fn_) as f64).sqrt();
    let mcc = div(tp as f64 * tn as f64 - fp as f64 * fn_ as f64, mcc_den);
    HandMetrics {
        tp,
        tn,
        fp,
        fn_,
        accuracy: po,
        precision,
        recall,
        f1,
        kappa,
        mcc,
    }
}

pub fn hand_brier(y: &[u8], s: &[f64]) -> f64 {
    let mut t = 0.0;
    for i in 0..y.len() {
        t += (s[i] - y[i] as f64).powi(2);
    }
    t / y.len() as f64
}
