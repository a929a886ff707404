//! Superpoint-aware, scale-invariant tokenization of 3D point clouds.
//!
//! The crate is organized as a pipeline:
//!
//! - [`geometry`]: point clouds, exact k-d tree neighbor queries, farthest
//!   point sampling, normals and eigenvalue descriptors.
//! - [`segmentation`]: superpoint oversegmentation by greedy ℓ0 cut pursuit
//!   on a k-NN graph, with an exact path-graph oracle and a Dinic min-cut.
//! - [`tokenizer`]: superpoint-balanced weighted FPS, radius estimation,
//!   superpoint-constrained grouping, radius-normalized patch offsets and
//!   sinusoidal position encoding.
//! - [`propagation`]: superpoint-masked inverse-distance upsampling and
//!   superpoint pooling.
//! - [`ssl`]: masking, query-decoder attention, Sinkhorn-constrained
//!   K-Means, assignment and distillation losses with analytic gradients.
//! - [`io`]: PLY, feature-matrix, partition, token and config files.
//! - [`synthetic`]: seeded primitive scenes with ground-truth labels.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod propagation;
pub mod segmentation;
pub mod ssl;
pub mod synthetic;
pub mod tokenizer;

mod rng;

pub use error::{Error, Result};
pub use geometry::{PointCloud, SpatialIndex};
pub use io::Config;
pub use segmentation::SuperpointPartition;
pub use tokenizer::{TokenizerConfig, TokenizerOutput};
