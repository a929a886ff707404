//! Superpoint-aware tokenization: balanced sampling, radius estimation,
//! constrained grouping, radius-normalized offsets and position encoding.

mod encoding;
mod featurizer;
mod grouping;
mod weights;
mod wfps;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{farthest_point_sampling, Point3, PointCloud, SpatialIndex};
use crate::segmentation::SuperpointPartition;

pub use encoding::{estimate_radius, normalize_patch, positional_encoding};
pub use featurizer::default_featurizer;
pub use grouping::{group_patches, GroupingMode, TokenPatch};
pub use weights::{superpoint_weights, SamplingWeights};
pub use wfps::{draw_first_index, weighted_fps, ExponentSign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    /// Number of tokens `N`.
    pub n_tokens: usize,
    /// Maximum members per patch `M`.
    pub patch_cap: usize,
    /// WFPS exponent in `[0, 1]`; 0 is plain FPS.
    pub gamma: f64,
    /// Radius multiplier over the mean centroid spacing, at least 1.
    pub alpha: f64,
    pub mode: GroupingMode,
    /// Divide offsets by the grouping radius.
    pub normalize: bool,
    pub seed: u64,
    /// Position-encoding width; a multiple of 6.
    pub pe_dim: usize,
    pub wfps_exponent_sign: ExponentSign,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            n_tokens: 64,
            patch_cap: 32,
            gamma: 0.1,
            alpha: 1.0,
            mode: GroupingMode::BallSpt,
            normalize: true,
            seed: 0,
            pe_dim: 96,
            wfps_exponent_sign: ExponentSign::Positive,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tokens == 0 {
            return Err(Error::invalid("n_tokens must be at least 1"));
        }
        if self.patch_cap == 0 {
            return Err(Error::invalid("patch_cap must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha {} must be finite and >= 1", self.alpha)));
        }
        if self.pe_dim == 0 || !self.pe_dim.is_multiple_of(6) {
            return Err(Error::invalid(format!("pe_dim {} must be a positive multiple of 6", self.pe_dim)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenizerStats {
    /// Patch size → number of patches.
    pub size_histogram: BTreeMap<usize, usize>,
    /// Patches holding only their center.
    pub singleton_count: usize,
}

impl TokenizerStats {
    pub fn from_patches(patches: &[TokenPatch]) -> Self {
        let mut size_histogram = BTreeMap::new();
        for p in patches {
            *size_histogram.entry(p.len()).or_insert(0) += 1;
        }
        Self {
            singleton_count: patches.iter().filter(|p| p.len() == 1).count(),
            size_histogram,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TokenizerOutput {
    pub centroid_indices: Vec<usize>,
    pub centroids: Vec<Point3>,
    pub patches: Vec<TokenPatch>,
    pub radius: f64,
    pub spacing: f64,
    pub pe: Array2<f64>,
    pub mode: GroupingMode,
    pub normalize: bool,
    pub stats: TokenizerStats,
}

impl TokenizerOutput {
    pub fn memberships(&self) -> Vec<&[usize]> {
        self.patches.iter().map(|p| p.members.as_slice()).collect()
    }
}

/// Full tokenization: weights, WFPS, radius, grouping, offsets, encoding.
pub fn tokenize(
    cloud: &PointCloud,
    partition: &SuperpointPartition,
    config: &TokenizerConfig,
) -> Result<TokenizerOutput> {
    config.validate()?;
    if partition.len() != cloud.len() {
        return Err(Error::shape(format!(
            "partition labels {} points but the cloud has {}",
            partition.len(),
            cloud.len()
        )));
    }
    if config.n_tokens > cloud.len() {
        return Err(Error::InsufficientPoints {
            requested: config.n_tokens,
            available: cloud.len(),
        });
    }
    let weights = superpoint_weights(partition);
    let centroid_indices = weighted_fps(
        cloud.positions(),
        &weights,
        config.n_tokens,
        config.gamma,
        config.seed,
        config.wfps_exponent_sign,
    )?;
    let centroids: Vec<Point3> = centroid_indices.iter().map(|&i| *cloud.position(i)).collect();
    let (radius, spacing) = estimate_radius(&centroids, config.alpha)?;
    let patches = group_patches(
        cloud,
        partition,
        &centroid_indices,
        radius,
        config.patch_cap,
        config.mode,
        config.seed,
    )?;
    let patches = patches
        .into_iter()
        .map(|p| normalize_patch(cloud, p, radius, config.normalize))
        .collect::<Result<Vec<_>>>()?;
    let pe = positional_encoding(&centroids, config.pe_dim)?;
    Ok(TokenizerOutput {
        stats: TokenizerStats::from_patches(&patches),
        centroid_indices,
        centroids,
        patches,
        radius,
        spacing,
        pe,
        mode: config.mode,
        normalize: config.normalize,
    })
}

/// Plain FPS + kNN grouping from a given start point, the unmodified
/// tokenizer used for comparisons. Returns one member list per center.
pub fn baseline_tokenize(cloud: &PointCloud, n: usize, cap: usize, start: usize) -> Result<Vec<Vec<usize>>> {
    let centers = farthest_point_sampling(cloud.positions(), n, start)?;
    let index = SpatialIndex::new(cloud.positions())?;
    let k = cap.min(cloud.len());
    centers
        .iter()
        .map(|&c| Ok(index.knn(cloud.position(c), k)?.into_iter().map(|n| n.index).collect()))
        .collect()
}

/// Mean over patches of the fraction of members sharing the patch's
/// majority label.
pub fn patch_purity(patches: &[TokenPatch], labels: &[usize]) -> f64 {
    if patches.is_empty() {
        return 1.0;
    }
    let total: f64 = patches
        .iter()
        .map(|p| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &m in &p.members {
                *counts.entry(labels[m]).or_insert(0) += 1;
            }
            let majority = counts.values().copied().max().unwrap_or(0);
            majority as f64 / p.len().max(1) as f64
        })
        .sum();
    total / patches.len() as f64
}

/// Fraction of patches whose members carry more than one label.
pub fn boundary_crossing_rate(patches: &[TokenPatch], labels: &[usize]) -> f64 {
    if patches.is_empty() {
        return 0.0;
    }
    let crossing = patches
        .iter()
        .filter(|p| p.members.iter().any(|&m| labels[m] != labels[p.members[0]]))
        .count();
    crossing as f64 / patches.len() as f64
}
