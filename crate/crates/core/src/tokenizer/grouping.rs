use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::index::cap_subsample;
use crate::geometry::{Point3, PointCloud, SpatialIndex};
use crate::rng;
use crate::segmentation::SuperpointPartition;

/// Patch membership rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupingMode {
    /// `M` nearest points.
    #[serde(rename = "knn")]
    Knn,
    /// Points within radius `r`, capped at `M`.
    #[serde(rename = "ball")]
    Ball,
    /// `M` nearest points of the center's superpoint.
    #[serde(rename = "knn+spt")]
    KnnSpt,
    /// Points of the center's superpoint within `r`, capped at `M`.
    #[serde(rename = "ball+spt")]
    BallSpt,
}

impl GroupingMode {
    pub const ALL: [GroupingMode; 4] = [Self::Knn, Self::Ball, Self::KnnSpt, Self::BallSpt];

    pub fn is_ball(self) -> bool {
        matches!(self, Self::Ball | Self::BallSpt)
    }

    pub fn is_superpoint_constrained(self) -> bool {
        matches!(self, Self::KnnSpt | Self::BallSpt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Knn => "knn",
            Self::Ball => "ball",
            Self::KnnSpt => "knn+spt",
            Self::BallSpt => "ball+spt",
        }
    }
}

impl std::str::FromStr for GroupingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown grouping mode {s:?}; expected knn, ball, knn+spt or ball+spt")))
    }
}

impl std::fmt::Display for GroupingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One token: a center point and the indices of its members.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenPatch {
    pub center_index: usize,
    pub center: Point3,
    /// Member indices; always contains `center_index`.
    pub members: Vec<usize>,
    /// Superpoint label of the center.
    pub superpoint: usize,
    /// Row-major `members.len() × offset_width` offsets, filled by
    /// [`normalize_patch`](super::normalize_patch).
    pub offsets: Vec<f64>,
    pub offset_width: usize,
}

impl TokenPatch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn offset_row(&self, j: usize) -> &[f64] {
        &self.offsets[j * self.offset_width..(j + 1) * self.offset_width]
    }
}

/// Groups points around each centroid.
///
/// Every patch contains its center. Ball modes keep points with
/// `‖p − center‖ ≤ r`; when more than `cap` qualify, the center plus a
/// uniform seeded subsample of `cap − 1` others are kept (member lists
/// ascending). kNN modes keep the `cap` nearest (ascending distance).
/// `+spt` modes only consider points of the center's superpoint; a
/// superpoint-constrained ball that captures nothing but its center yields a
/// singleton patch.
pub fn group_patches(
    cloud: &PointCloud,
    partition: &SuperpointPartition,
    centroid_indices: &[usize],
    r: f64,
    cap: usize,
    mode: GroupingMode,
    seed: u64,
) -> Result<Vec<TokenPatch>> {
    let h = cloud.len();
    if partition.len() != h {
        return Err(Error::shape(format!(
            "partition labels {} points but the cloud has {h}",
            partition.len()
        )));
    }
    if cap == 0 {
        return Err(Error::invalid("patch cap must be at least 1"));
    }
    if mode.is_ball() && !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("ball grouping needs a positive finite radius, got {r}")));
    }
    if let Some(&bad) = centroid_indices.iter().find(|&&c| c >= h) {
        return Err(Error::invalid(format!("centroid index {bad} out of range")));
    }
    let pts = cloud.positions();

    let global = if mode.is_superpoint_constrained() {
        None
    } else {
        Some(SpatialIndex::new(pts)?)
    };
    let mut local: HashMap<usize, SpatialIndex> = HashMap::new();
    if mode.is_superpoint_constrained() {
        let members = partition.members();
        let mut needed: Vec<usize> = centroid_indices.iter().map(|&c| partition.label(c)).collect();
        needed.sort_unstable();
        needed.dedup();
        let built: Vec<(usize, SpatialIndex)> = needed
            .into_par_iter()
            .map(|label| {
                let ids = members[label].clone();
                let sub: Vec<Point3> = ids.iter().map(|&i| pts[i]).collect();
                SpatialIndex::with_ids(&sub, ids).map(|idx| (label, idx))
            })
            .collect::<Result<_>>()?;
        local.extend(built);
    }

    centroid_indices
        .par_iter()
        .enumerate()
        .map(|(rank, &c)| {
            let label = partition.label(c);
            let index = match &global {
                Some(g) => g,
                None => &local[&label],
            };
            let center = pts[c];
            let members = if mode.is_ball() {
                let ids: Vec<usize> = index.within(&center, r).into_iter().map(|n| n.index).collect();
                cap_keep_center(ids, c, cap, rng::derive(seed, rank as u64))
            } else {
                let k = cap.min(index.len());
                let mut ids: Vec<usize> = index.knn(&center, k)?.into_iter().map(|n| n.index).collect();
                if !ids.contains(&c) {
                    ids.pop();
                    ids.insert(0, c);
                }
                ids
            };
            Ok(TokenPatch {
                center_index: c,
                center,
                members,
                superpoint: label,
                offsets: Vec::new(),
                offset_width: 0,
            })
        })
        .collect()
}

fn cap_keep_center(mut ids: Vec<usize>, center: usize, cap: usize, seed: u64) -> Vec<usize> {
    if !ids.contains(&center) {
        // the center is always at distance zero; only reachable with NaN radii
        ids.push(center);
        ids.sort_unstable();
    }
    if ids.len() <= cap {
        return ids;
    }
    ids.retain(|&i| i != center);
    let mut kept = cap_subsample(ids, cap - 1, seed);
    kept.push(center);
    kept.sort_unstable();
    kept
}
