//! Exact k-nearest-neighbor search under Euclidean distance.
//!
//! Neighbors are ordered by (squared distance, row index), so ties always
//! resolve to the lower row index. The k-d tree returns exactly the same
//! neighbor lists as a linear scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::matrix::{squared_distance, Matrix};

const LEAF_SIZE: usize = 16;

/// A neighbor: position in the indexed point set and squared distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.dist2.sqrt()
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// k-d tree over a subset of rows of a matrix. Neighbor indices refer to
/// positions in `rows` (or to matrix rows when built with [`KdTree::new`]).
pub struct KdTree<'a> {
    points: &'a Matrix,
    rows: Vec<usize>,
    order: Vec<usize>,
    root: Node,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a Matrix) -> Self {
        Self::over_rows(points, (0..points.rows()).collect())
    }

    /// Index only the listed matrix rows. Returned neighbor indices are
    /// positions within `rows`.
    pub fn over_rows(points: &'a Matrix, rows: Vec<usize>) -> Self {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let root = build(points, &rows, &mut order, 0, rows.len());
        KdTree {
            points,
            rows,
            order,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn point(&self, pos: usize) -> &[f64] {
        self.points.row(self.rows[pos])
    }

    /// The `k` nearest points to `query`, sorted ascending. `exclude` skips
    /// one position (the query itself when searching within the set).
    pub fn k_nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        self.search(&self.root, query, k, exclude, &mut heap);
        let mut out = heap.into_vec();
        out.sort();
        out
    }

    fn search(
        &self,
        node: &Node,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Neighbor>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &pos in &self.order[*start..*end] {
                    if Some(pos) == exclude {
                        continue;
                    }
                    let cand = Neighbor {
                        index: pos,
                        dist2: squared_distance(query, self.point(pos)),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[*dim] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, exclude, heap);
                // Strict comparison keeps equal-distance candidates reachable
                // so index tie-breaking matches a linear scan.
                let bound = diff * diff;
                if heap.len() < k || bound <= heap.peek().expect("heap non-empty").dist2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

fn build(points: &Matrix, rows: &[usize], order: &mut [usize], start: usize, end: usize) -> Node {
    let n = end - start;
    if n <= LEAF_SIZE || points.cols() == 0 {
        return Node::Leaf { start, end };
    }
    let slice = &mut order[start..end];
    let mut best_dim = 0;
    let mut best_spread = -1.0;
    for d in 0..points.cols() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in slice.iter() {
            let v = points.get(rows[p], d);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_dim = d;
        }
    }
    if best_spread <= 0.0 {
        return Node::Leaf { start, end };
    }
    let mid = n / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points
            .get(rows[a], best_dim)
            .total_cmp(&points.get(rows[b], best_dim))
    });
    let value = points.get(rows[slice[mid]], best_dim);
    // Points left of `mid` are <= value and right of it are >= value, so a
    // query's distance to the far side is bounded below by |q - value|.
    let left = build(points, rows, order, start, start + mid);
    let right = build(points, rows, order, start + mid, end);
    Node::Split {
        dim: best_dim,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Linear-scan reference search over all rows of `points`.
pub fn brute_k_nearest(
    points: &Matrix,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = (0..points.rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| Neighbor {
            index: i,
            dist2: squared_distance(query, points.row(i)),
        })
        .collect();
    all.sort();
    all.truncate(k);
    all
}
