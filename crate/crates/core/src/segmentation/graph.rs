use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected weighted graph with no self-loops or duplicate edges.
///
/// Edges are stored with `a < b`, sorted. A CSR adjacency is kept alongside.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl AdjacencyGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge {
                a: e.a.min(e.b),
                b: e.a.max(e.b),
                weight: e.weight,
            })
            .collect();
        for e in &edges {
            if e.b >= vertex_count {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) references a vertex outside 0..{vertex_count}",
                    e.a, e.b
                )));
            }
            if e.a == e.b {
                return Err(Error::invalid(format!("self-loop at vertex {}", e.a)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has non-positive or non-finite weight {}",
                    e.a, e.b, e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        if let Some(w) = edges.windows(2).find(|w| (w[0].a, w[0].b) == (w[1].a, w[1].b)) {
            return Err(Error::invalid(format!("duplicate edge ({}, {})", w[0].a, w[0].b)));
        }

        let mut degree = vec![0usize; vertex_count + 1];
        for e in &edges {
            degree[e.a + 1] += 1;
            degree[e.b + 1] += 1;
        }
        for i in 0..vertex_count {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut neighbors = vec![(0, 0.0); 2 * edges.len()];
        for e in &edges {
            neighbors[fill[e.a]] = (e.b, e.weight);
            fill[e.a] += 1;
            neighbors[fill[e.b]] = (e.a, e.weight);
            fill[e.b] += 1;
        }
        Ok(Self {
            vertex_count,
            edges,
            offsets,
            neighbors,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, weight)` pairs of `v`, ascending by neighbor.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Connected-component label per vertex, numbered by smallest member.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        components_where(self, |_, _| true)
    }
}

/// Components of the subgraph keeping edges for which `keep(u, v)` holds.
pub(crate) fn components_where(
    graph: &AdjacencyGraph,
    keep: impl Fn(usize, usize) -> bool,
) -> (Vec<usize>, usize) {
    let n = graph.vertex_count();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if label[v] == usize::MAX && keep(u, v) {
                    label[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Symmetrized k-NN graph with unit weights.
///
/// Each point is linked to its `k` nearest other points (ties by index);
/// the union of both directions is kept once. Coincident points never
/// produce self-loops because neighbors are filtered by index.
pub fn build_knn_graph(cloud: &PointCloud, k: usize) -> Result<AdjacencyGraph> {
    let h = cloud.len();
    if k == 0 {
        return Err(Error::invalid("graph degree k must be at least 1"));
    }
    if h <= k {
        return Err(Error::InsufficientPoints {
            requested: k + 1,
            available: h,
        });
    }
    let pts = cloud.positions();
    let index = SpatialIndex::new(pts)?;
    let mut pairs = Vec::with_capacity(h * k);
    for (i, p) in pts.iter().enumerate() {
        let nbrs = index.knn(p, k + 1)?;
        for n in nbrs.iter().filter(|n| n.index != i).take(k) {
            pairs.push((i.min(n.index), i.max(n.index)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let edges = pairs
        .into_iter()
        .map(|(a, b)| Edge { a, b, weight: 1.0 })
        .collect();
    AdjacencyGraph::new(h, edges)
}
