//! Training-partition preprocessing: SMOTE balancing, LOF outlier removal
//! and z-score standardization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, BENIGN, DDOS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// Local reachability density used when the mean reachability distance is 0.
pub const LOF_EPSILON: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant features.
    pub scale: Vec<f64>,
    /// Features whose variance was zero at fit time.
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

pub fn fit_scaler(train: &Dataset) -> Result<Scaler> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit a scaler on an empty dataset"));
    }
    let n = train.len() as f64;
    let d = train.n_features();
    let mut mean = vec![0.0; d];
    for row in train.x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in train.x.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = v - m;
            *s += c * c;
        }
    }
    let mut constant = vec![false; d];
    let scale = var
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                constant[j] = true;
                1.0
            }
        })
        .collect();
    Ok(Scaler {
        mean,
        scale,
        constant,
    })
}

pub fn apply_scaler(scaler: &Scaler, ds: &Dataset) -> Result<Dataset> {
    if ds.n_features() != scaler.n_features() {
        return Err(Error::ArityMismatch {
            expected: scaler.n_features(),
            actual: ds.n_features(),
        });
    }
    let mut out = ds.clone();
    for i in 0..out.len() {
        scaler.transform_row(out.x.row_mut(i));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority ratio after oversampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Oversampled dataset plus the (parent, neighbor) row pair behind each
/// synthetic record, in append order.
#[derive(Clone, Debug)]
pub struct SmoteOutcome {
    pub dataset: Dataset,
    pub minority_label: u8,
    pub parents: Vec<(usize, usize)>,
}

impl SmoteOutcome {
    pub fn added(&self) -> usize {
        self.parents.len()
    }
}

pub fn smote_oversample(train: &Dataset, cfg: &SmoteConfig) -> Result<Dataset> {
    smote_with_parents(train, cfg).map(|o| o.dataset)
}

/// Append synthetic minority records `x + u * (nn - x)` until the minority
/// count reaches `round(target_ratio * majority)`. Parents are visited
/// round-robin in row order; the neighbor and `u` are drawn from the seed.
pub fn smote_with_parents(train: &Dataset, cfg: &SmoteConfig) -> Result<SmoteOutcome> {
    if cfg.k_neighbors == 0 {
        return Err(Error::invalid("SMOTE k_neighbors must be positive"));
    }
    if !(cfg.target_ratio.is_finite() && cfg.target_ratio > 0.0) {
        return Err(Error::invalid("SMOTE target_ratio must be positive"));
    }
    let dist = train.label_distribution();
    if dist.benign_count == 0 || dist.ddos_count == 0 {
        return Err(Error::invalid("SMOTE needs both classes present"));
    }
    let (minority_label, majority_label) = if dist.ddos_count <= dist.benign_count {
        (DDOS, BENIGN)
    } else {
        (BENIGN, DDOS)
    };
    let minority = train.class_indices(minority_label);
    let majority_count = dist.count(majority_label);
    if cfg.k_neighbors >= minority.len() {
        return Err(Error::invalid(format!(
            "SMOTE k_neighbors={} needs more than {} minority records",
            cfg.k_neighbors,
            minority.len()
        )));
    }
    let target = (cfg.target_ratio * majority_count as f64).round() as usize;
    let needed = target.saturating_sub(minority.len());

    let mut out = train.clone();
    let mut parents = Vec::with_capacity(needed);
    if needed > 0 {
        let tree = KdTree::over_rows(&train.x, minority.clone());
        let neighbor_lists: Vec<Vec<usize>> = (0..minority.len().min(needed))
            .into_par_iter()
            .map(|p| {
                tree.k_nearest(train.x.row(minority[p]), cfg.k_neighbors, Some(p))
                    .into_iter()
                    .map(|n| minority[n.index])
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut synth = vec![0.0; train.n_features()];
        for j in 0..needed {
            let p = j % minority.len();
            let parent = minority[p];
            let nbrs = &neighbor_lists[p];
            let nn = nbrs[rng.random_range(0..nbrs.len())];
            let u: f64 = rng.random();
            let (a, b) = (train.x.row(parent), train.x.row(nn));
            for ((s, xa), xb) in synth.iter_mut().zip(a).zip(b) {
                *s = xa + u * (xb - xa);
            }
            out.x.push_row(&synth);
            out.y.push(minority_label);
            parents.push((parent, nn));
        }
    }
    let out = out.with_provenance_note(&format!(
        "SMOTE k={} ratio={} seed={} added={}",
        cfg.k_neighbors,
        cfg.target_ratio,
        cfg.seed,
        parents.len()
    ));
    Ok(SmoteOutcome {
        dataset: out,
        minority_label,
        parents,
    })
}

// ---------------------------------------------------------------------------
// Local Outlier Factor
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LofConfig {
    pub k_neighbors: usize,
    /// Records scoring above this are dropped.
    pub threshold: f64,
}

impl Default for LofConfig {
    fn default() -> Self {
        LofConfig {
            k_neighbors: 20,
            threshold: 1.5,
        }
    }
}

/// LOF score per row. Each row's neighborhood is its `k` nearest other rows
/// (ties by row index).
pub fn lof_scores(x: &Matrix, k: usize) -> Result<Vec<f64>> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "LOF needs 0 < k < rows (k={k}, rows={n})"
        )));
    }
    let tree = KdTree::new(x);
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            tree.k_nearest(x.row(i), k, Some(i))
                .into_iter()
                .map(|nb| (nb.index, nb.distance()))
                .collect()
        })
        .collect();
    let k_distance: Vec<f64> = neighbors.iter().map(|nb| nb[k - 1].1).collect();
    let lrd: Vec<f64> = neighbors
        .par_iter()
        .map(|nb| {
            let reach: f64 = nb.iter().map(|&(o, d)| d.max(k_distance[o])).sum::<f64>() / k as f64;
            if reach > 0.0 {
                1.0 / reach
            } else {
                1.0 / LOF_EPSILON
            }
        })
        .collect();
    Ok(neighbors
        .par_iter()
        .enumerate()
        .map(|(i, nb)| nb.iter().map(|&(o, _)| lrd[o] / lrd[i]).sum::<f64>() / k as f64)
        .collect())
}

#[derive(Clone, Debug)]
pub struct OutlierRemoval {
    pub dataset: Dataset,
    /// Original row indices that were dropped, ascending.
    pub removed: Vec<usize>,
    pub scores: Vec<f64>,
}

pub fn remove_outliers(train: &Dataset, cfg: &LofConfig) -> Result<OutlierRemoval> {
    if cfg.threshold.is_nan() || cfg.threshold <= 1.0 {
        return Err(Error::invalid("LOF threshold must exceed 1"));
    }
    let scores = lof_scores(&train.x, cfg.k_neighbors)?;
    let (keep, removed): (Vec<usize>, Vec<usize>) =
        (0..train.len()).partition(|&i| scores[i] <= cfg.threshold);
    let before = train.label_distribution();
    let ds = train.subset(&keep);
    let after = ds.label_distribution();
    for label in [BENIGN, DDOS] {
        if before.count(label) > 0 && after.count(label) == 0 {
            return Err(Error::invalid(format!(
                "LOF removal would empty class {label}"
            )));
        }
    }
    let ds = ds.with_provenance_note(&format!(
        "LOF k={} threshold={} removed={}",
        cfg.k_neighbors,
        cfg.threshold,
        removed.len()
    ));
    Ok(OutlierRemoval {
        dataset: ds,
        removed,
        scores,
    })
}
