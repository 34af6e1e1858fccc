//! Binary decision trees shared by the random forest (Gini CART) and the
//! gradient booster (second-order regression trees).
//!
//! Splits send `x[feature] <= threshold` left.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Threshold strictly between `lo` and `hi` (inclusive of `lo`).
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

// ---------------------------------------------------------------------------
// Gini CART
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features examined per split before accepting the best found so far.
    pub max_features: usize,
}

/// n * gini for a node with `pos` positives out of `n`.
#[inline]
fn weighted_gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

/// Grow a classification tree on `samples` (row indices, repeats allowed).
/// Leaves hold the positive fraction. Impurity decreases are added into
/// `importance` per feature.
pub fn grow_classifier<R: Rng>(
    x: &Matrix,
    y: &[u8],
    mut samples: Vec<usize>,
    params: &CartParams,
    rng: &mut R,
    importance: &mut [f64],
) -> Tree {
    let d = x.cols();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, 0usize, samples.len(), 0usize)];
    let mut pairs: Vec<(f64, u8)> = Vec::new();
    let mut features: Vec<usize> = (0..d).collect();

    while let Some((node, start, end, depth)) = stack.pop() {
        let s = &mut samples[start..end];
        let n = s.len();
        let pos = s.iter().filter(|&&i| y[i] == 1).count();
        let value = if n == 0 { 0.0 } else { pos as f64 / n as f64 };
        if pos == 0 || pos == n || n < params.min_samples_split || depth >= params.max_depth {
            nodes[node] = Node::Leaf { value };
            continue;
        }

        features.shuffle(rng);
        let parent = weighted_gini(pos as f64, n as f64);
        let mut best: Option<(f64, usize, f64)> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= params.max_features && best.is_some() {
                break;
            }
            pairs.clear();
            pairs.extend(s.iter().map(|&i| (x.get(i, f), y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for k in 0..n - 1 {
                left_pos += pairs[k].1 as f64;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let score = weighted_gini(left_pos, nl)
                    + weighted_gini(pos as f64 - left_pos, n as f64 - nl);
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, f, midpoint(pairs[k].0, pairs[k + 1].0)));
                }
            }
        }

        let Some((score, f, threshold)) = best else {
            nodes[node] = Node::Leaf { value };
            continue;
        };
        importance[f] += parent - score;
        let mid = partition(s, |i| x.get(i, f) <= threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[node] = Node::Split {
            feature: f,
            threshold,
            left,
            right: left + 1,
        };
        stack.push((left + 1, start + mid, end, depth + 1));
        stack.push((left, start, start + mid, depth + 1));
    }
    Tree { nodes }
}

/// Stable partition: rows satisfying `pred` first. Returns the split point.
fn partition(s: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (l, r): (Vec<usize>, Vec<usize>) = s.iter().partition(|&&i| pred(i));
    let mid = l.len();
    s[..mid].copy_from_slice(&l);
    s[mid..].copy_from_slice(&r);
    mid
}

// ---------------------------------------------------------------------------
// Second-order regression trees
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct NewtonParams {
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Shrinkage applied to every leaf weight.
    pub learning_rate: f64,
}

/// Row indices sorted by each feature, ties by row index.
pub fn presort(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
            idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
            idx
        })
        .collect()
}

const NO_SLOT: usize = usize::MAX;

/// Grow a depth-limited tree level by level with exact greedy splits on
/// gradient/hessian sums. Leaf weight is `-learning_rate * G / (H + lambda)`.
pub fn grow_newton(
    x: &Matrix,
    sorted: &[Vec<u32>],
    grad: &[f64],
    hess: &[f64],
    params: &NewtonParams,
) -> Tree {
    let n = x.rows();
    let lambda = params.lambda;
    let leaf = |g: f64, h: f64| -params.learning_rate * g / (h + lambda);
    let score = |g: f64, h: f64| g * g / (h + lambda);

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // tree node currently owning each row
    let mut node_of: Vec<usize> = vec![0; n];
    let (g0, h0) = grad
        .iter()
        .zip(hess)
        .fold((0.0, 0.0), |(a, b), (g, h)| (a + g, b + h));
    // (node id, G, H) for nodes still open at this level
    let mut level: Vec<(usize, f64, f64)> = vec![(0, g0, h0)];

    for depth in 0..=params.max_depth {
        if level.is_empty() {
            break;
        }
        if depth == params.max_depth {
            for &(id, g, h) in &level {
                nodes[id] = Node::Leaf { value: leaf(g, h) };
            }
            break;
        }
        let mut slot_of = vec![NO_SLOT; nodes.len()];
        for (s, &(id, _, _)) in level.iter().enumerate() {
            slot_of[id] = s;
        }
        let m = level.len();
        // best (gain, feature, threshold) per slot
        let mut best: Vec<(f64, usize, f64)> = vec![(0.0, usize::MAX, 0.0); m];
        let mut gl = vec![0.0; m];
        let mut hl = vec![0.0; m];
        let mut last: Vec<Option<f64>> = vec![None; m];
        for (f, order) in sorted.iter().enumerate() {
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = None);
            for &r in order {
                let r = r as usize;
                let id = node_of[r];
                let s = if id < slot_of.len() { slot_of[id] } else { NO_SLOT };
                if s == NO_SLOT {
                    continue;
                }
                let v = x.get(r, f);
                if let Some(lv) = last[s] {
                    if v > lv {
                        let (_, g, h) = level[s];
                        let (gr, hr) = (g - gl[s], h - hl[s]);
                        if hl[s] >= params.min_child_weight && hr >= params.min_child_weight {
                            let gain = score(gl[s], hl[s]) + score(gr, hr) - score(g, h);
                            if gain > best[s].0 {
                                best[s] = (gain, f, midpoint(lv, v));
                            }
                        }
                    }
                }
                gl[s] += grad[r];
                hl[s] += hess[r];
                last[s] = Some(v);
            }
        }

        let mut next = Vec::new();
        let mut child_of_slot: Vec<Option<(usize, usize, usize, f64)>> = vec![None; m];
        for (s, &(id, g, h)) in level.iter().enumerate() {
            let (_, f, threshold) = best[s];
            if f == usize::MAX {
                nodes[id] = Node::Leaf { value: leaf(g, h) };
                continue;
            }
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[id] = Node::Split {
                feature: f,
                threshold,
                left,
                right: left + 1,
            };
            child_of_slot[s] = Some((left, left + 1, f, threshold));
        }
        let mut sums = vec![(0.0, 0.0); nodes.len()];
        for r in 0..n {
            let id = node_of[r];
            let s = if id < slot_of.len() { slot_of[id] } else { NO_SLOT };
            if s == NO_SLOT {
                continue;
            }
            match child_of_slot[s] {
                Some((l, rt, f, thr)) => {
                    let c = if x.get(r, f) <= thr { l } else { rt };
                    node_of[r] = c;
                    sums[c].0 += grad[r];
                    sums[c].1 += hess[r];
                }
                None => node_of[r] = usize::MAX,
            }
        }
        for &(l, rt, _, _) in child_of_slot.iter().flatten() {
            next.push((l, sums[l].0, sums[l].1));
            next.push((rt, sums[rt].0, sums[rt].1));
        }
        level = next;
    }
    Tree { nodes }
}
