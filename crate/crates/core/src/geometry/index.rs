use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng;

use super::{dist2, Point3};

const LEAF_SIZE: usize = 16;

/// A query result: point id and squared Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

struct HeapItem(Neighbor);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.0.key_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.key_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact k-d tree over an immutable snapshot of points.
///
/// Results are identical to an exhaustive scan: kNN orders by ascending
/// squared distance, then ascending id; ball membership is `dist2 <= r * r`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(points: &[Point3]) -> Result<Self> {
        Self::with_ids(points, (0..points.len()).collect())
    }

    /// Index over `points` whose results report `ids[i]` for `points[i]`.
    /// Ties are broken by id.
    pub fn with_ids(points: &[Point3], ids: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("cannot index an empty point set"));
        }
        if ids.len() != points.len() {
            return Err(Error::shape("one id per indexed point required"));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build(points, &mut order, 0, points.len(), &mut nodes);
        Ok(Self {
            points: order.iter().map(|&i| points[i]).collect(),
            ids: order.iter().map(|&i| ids[i]).collect(),
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `query`, ascending by (distance, id).
    pub fn knn(&self, query: &Point3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if k > self.len() {
            return Err(Error::InsufficientPoints {
                requested: k,
                available: self.len(),
            });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, query, k, &mut heap);
        let mut out: Vec<Neighbor> = heap.into_iter().map(|h| h.0).collect();
        out.sort_by(Neighbor::key_cmp);
        Ok(out)
    }

    fn knn_visit(&self, node: usize, q: &Point3, k: usize, heap: &mut BinaryHeap<HeapItem>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for j in start..end {
                    let cand = Neighbor {
                        index: self.ids[j],
                        dist2: dist2(q, &self.points[j]),
                    };
                    if heap.len() < k {
                        heap.push(HeapItem(cand));
                    } else if let Some(top) = heap.peek() {
                        if cand.key_cmp(&top.0) == Ordering::Less {
                            heap.pop();
                            heap.push(HeapItem(cand));
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_visit(near, q, k, heap);
                let bound = diff * diff;
                // `<=` keeps equal-distance candidates with smaller ids reachable.
                let visit_far = heap.len() < k || heap.peek().is_some_and(|t| bound <= t.0.dist2);
                if visit_far {
                    self.knn_visit(far, q, k, heap);
                }
            }
        }
    }

    /// Every point with `dist2(center, p) <= r * r`, ascending by id.
    pub fn within(&self, center: &Point3, r: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if r.is_nan() || r < 0.0 {
            return out;
        }
        self.within_visit(0, center, r * r, &mut out);
        out.sort_by_key(|n| n.index);
        out
    }

    fn within_visit(&self, node: usize, q: &Point3, r2: f64, out: &mut Vec<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for j in start..end {
                    let d = dist2(q, &self.points[j]);
                    if d <= r2 {
                        out.push(Neighbor {
                            index: self.ids[j],
                            dist2: d,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.within_visit(near, q, r2, out);
                if diff * diff <= r2 {
                    self.within_visit(far, q, r2, out);
                }
            }
        }
    }

    /// Calls `f(id, dist2)` for every point with `dist2(center, p) <= r2`,
    /// in tree order.
    pub(crate) fn for_each_within<F: FnMut(usize, f64)>(&self, center: &Point3, r2: f64, f: &mut F) {
        self.visit_within(0, center, r2, f);
    }

    fn visit_within<F: FnMut(usize, f64)>(&self, node: usize, q: &Point3, r2: f64, f: &mut F) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for j in start..end {
                    let d = dist2(q, &self.points[j]);
                    if d <= r2 {
                        f(self.ids[j], d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.visit_within(near, q, r2, f);
                if diff * diff <= r2 {
                    self.visit_within(far, q, r2, f);
                }
            }
        }
    }

    /// Ball query capped at `cap` results.
    ///
    /// When more than `cap` points fall inside the ball, a uniform random
    /// subset of size `cap` is drawn from a stream seeded by `seed`. The
    /// result is ascending by id.
    pub fn ball_query(&self, center: &Point3, r: f64, cap: usize, seed: u64) -> Result<Vec<usize>> {
        if !(r >= 0.0) {
            return Err(Error::invalid("ball radius must be non-negative"));
        }
        if cap == 0 {
            return Err(Error::invalid("ball query cap must be at least 1"));
        }
        let ids: Vec<usize> = self.within(center, r).into_iter().map(|n| n.index).collect();
        Ok(cap_subsample(ids, cap, seed))
    }
}

/// Uniform seeded subsample of a sorted id list down to `cap`, kept sorted.
pub(crate) fn cap_subsample(ids: Vec<usize>, cap: usize, seed: u64) -> Vec<usize> {
    if ids.len() <= cap {
        return ids;
    }
    let mut rng = rng::seeded(seed);
    let mut picks = sample(&mut rng, ids.len(), cap).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|p| ids[p]).collect()
}

fn build(points: &[Point3], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let slice = &mut order[start..end];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in slice.iter() {
        for a in 0..3 {
            lo[a] = lo[a].min(points[i][a]);
            hi[a] = hi[a].max(points[i][a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] == 0.0 {
        // all points coincide
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let value = points[slice[mid]][axis];
    nodes.push(Node::Leaf { start, end });
    let left = build(points, order, start, start + mid, nodes);
    let right = build(points, order, start + mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}
