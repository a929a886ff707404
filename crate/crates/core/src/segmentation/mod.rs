//! Superpoint oversegmentation.
//!
//! Per-point features `[normal, f1, f2, f3]` are smoothed over a symmetric
//! k-NN graph by greedy ℓ0 cut pursuit on the Potts energy
//! `Σ ‖x_i − h_i‖² + μ Σ_{(i,j)} w_ij 1[x_i ≠ x_j]`.

mod cut_pursuit;
mod graph;
mod maxflow;
mod partition;
mod path_dp;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{compute_descriptors, default_anchor_count, PointCloud};

pub use cut_pursuit::{cut_pursuit_l0, potts_energy, CutPursuitResult, PottsProblem};
pub use graph::{build_knn_graph, AdjacencyGraph, Edge};
pub use maxflow::{FlowNetwork, MinCut};
pub use partition::SuperpointPartition;
pub use path_dp::{path_potts_dp, PathSegmentation};

/// Parameters of the descriptor + cut pursuit pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Neighbors per vertex in the adjacency graph.
    pub graph_k: usize,
    /// Anchors per descriptor neighborhood.
    pub descriptor_k: usize,
    /// Anchor count; `None` means a quarter of the cloud, floored at `descriptor_k`.
    pub anchor_count: Option<usize>,
    pub mu: f64,
    pub max_iters: usize,
    /// Minimum accepted gain as a fraction of the initial energy.
    pub min_gain_rel: f64,
    /// Superpoints smaller than this are merged into a neighbor.
    pub min_superpoint_size: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            graph_k: 10,
            descriptor_k: 16,
            anchor_count: None,
            mu: 0.3,
            max_iters: 10,
            min_gain_rel: 1e-6,
            min_superpoint_size: 5,
        }
    }
}

/// Builds the Potts problem for a cloud: descriptors as fidelity targets on
/// a unit-weight k-NN graph.
pub fn potts_problem(cloud: &PointCloud, config: &SegmentationConfig) -> Result<PottsProblem> {
    let h = cloud.len();
    let k = config.descriptor_k.min(h);
    let anchors = config
        .anchor_count
        .unwrap_or_else(|| default_anchor_count(h, k))
        .min(h);
    let descriptors = compute_descriptors(cloud, anchors, k)?;
    let features: Vec<f64> = descriptors.iter().flat_map(|d| d.feature()).collect();
    let graph = build_knn_graph(cloud, config.graph_k.min(h.saturating_sub(1)).max(1))?;
    PottsProblem::new(features, 6, graph, config.mu)
}

/// Descriptors, k-NN graph and cut pursuit in one call.
pub fn segment(cloud: &PointCloud, config: &SegmentationConfig) -> Result<CutPursuitResult> {
    let problem = potts_problem(cloud, config)?;
    let initial = problem.initial_energy();
    cut_pursuit_l0(
        &problem,
        config.max_iters.max(1),
        config.min_gain_rel * initial,
        config.min_superpoint_size,
    )
}
