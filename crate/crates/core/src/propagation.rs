//! Superpoint-masked inverse-distance upsampling of centroid features and
//! superpoint average pooling.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, Point3};
use crate::segmentation::SuperpointPartition;

pub const DEFAULT_EPSILON: f64 = 1e-4;
const FALLBACK_NEIGHBORS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    /// Added to every centroid distance, in the cloud's units.
    pub epsilon: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON }
    }
}

/// Points and centroids with labels, plus the centroid features to spread.
#[derive(Debug, Clone, Copy)]
pub struct PropagationInputs<'a> {
    pub point_positions: &'a [Point3],
    pub point_labels: &'a [usize],
    pub centroid_positions: &'a [Point3],
    pub centroid_labels: &'a [usize],
    /// `K × D`.
    pub centroid_features: ArrayView2<'a, f64>,
    /// Added to every distance; in the cloud's units.
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct Propagated {
    /// `H × D`.
    pub features: Array2<f64>,
    /// Points whose label matched no centroid.
    pub fallback_points: Vec<usize>,
}

impl PropagationInputs<'_> {
    fn validate(&self) -> Result<()> {
        let k = self.centroid_positions.len();
        if k == 0 {
            return Err(Error::invalid("propagation needs at least one centroid"));
        }
        if self.point_labels.len() != self.point_positions.len() {
            return Err(Error::shape("one label per point required"));
        }
        if self.centroid_labels.len() != k || self.centroid_features.nrows() != k {
            return Err(Error::shape(format!(
                "{k} centroid positions, {} labels and {} feature rows must agree",
                self.centroid_labels.len(),
                self.centroid_features.nrows()
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be positive and finite"));
        }
        Ok(())
    }
}

/// `(centroid, weight)` pairs of one point and whether the fallback was used.
pub type PointWeights = (Vec<(usize, f64)>, bool);

/// Sparse propagation weights per point: `(centroid, weight)` pairs and a
/// flag telling whether the unmasked fallback was used.
///
/// Matched points get `w_ik ∝ m_ik / (‖p_i − p̄_k‖ + ε)` over centroids
/// sharing their label. A point whose label no centroid carries uses
/// unmasked inverse-distance weights over its three nearest centroids.
pub fn propagation_weights(inputs: &PropagationInputs<'_>) -> Result<Vec<PointWeights>> {
    inputs.validate()?;
    let mut by_label: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &l) in inputs.centroid_labels.iter().enumerate() {
        by_label.entry(l).or_default().push(k);
    }
    let eps = inputs.epsilon;
    let cents = inputs.centroid_positions;
    Ok(inputs
        .point_positions
        .par_iter()
        .zip(inputs.point_labels.par_iter())
        .map(|(p, l)| {
            let inv = |k: usize| 1.0 / (dist2(p, &cents[k]).sqrt() + eps);
            let (raw, fallback): (Vec<(usize, f64)>, bool) = match by_label.get(l) {
                Some(ks) => (ks.iter().map(|&k| (k, inv(k))).collect(), false),
                None => {
                    let mut order: Vec<usize> = (0..cents.len()).collect();
                    order.sort_by(|&a, &b| dist2(p, &cents[a]).total_cmp(&dist2(p, &cents[b])).then(a.cmp(&b)));
                    order.truncate(FALLBACK_NEIGHBORS);
                    (order.into_iter().map(|k| (k, inv(k))).collect(), true)
                }
            };
            let total: f64 = raw.iter().map(|(_, w)| w).sum();
            (raw.into_iter().map(|(k, w)| (k, w / total)).collect(), fallback)
        })
        .collect())
}

/// Full-resolution features `f_i = Σ_k w_ik f̄_k`.
pub fn propagate_features(inputs: &PropagationInputs<'_>) -> Result<Propagated> {
    let weights = propagation_weights(inputs)?;
    let d = inputs.centroid_features.ncols();
    let mut features = Array2::zeros((inputs.point_positions.len(), d));
    let mut fallback_points = Vec::new();
    for (i, (row_w, fallback)) in weights.iter().enumerate() {
        if *fallback {
            fallback_points.push(i);
        }
        let mut row = features.row_mut(i);
        for &(k, w) in row_w {
            row.scaled_add(w, &inputs.centroid_features.row(k));
        }
    }
    Ok(Propagated {
        features,
        fallback_points,
    })
}

/// Mean feature of every superpoint, `S × D`.
pub fn pool_superpoint_features(point_features: ArrayView2<'_, f64>, partition: &SuperpointPartition) -> Result<Array2<f64>> {
    if point_features.nrows() != partition.len() {
        return Err(Error::shape(format!(
            "{} feature rows for a partition of {} points",
            point_features.nrows(),
            partition.len()
        )));
    }
    let mut pooled = Array2::zeros((partition.count(), point_features.ncols()));
    for (i, &l) in partition.labels().iter().enumerate() {
        let mut row = pooled.row_mut(l);
        row += &point_features.row(i);
    }
    for (mut row, &n) in pooled.rows_mut().into_iter().zip(partition.sizes()) {
        row /= n as f64;
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_source_copy() {
        let feats = array![[1.0, 2.0], [5.0, -1.0]];
        let inputs = PropagationInputs {
            point_positions: &[[0.3, 0.0, 0.0], [9.0, 9.0, 9.0]],
            point_labels: &[0, 1],
            centroid_positions: &[[0.0; 3], [1.0, 0.0, 0.0]],
            centroid_labels: &[0, 1],
            centroid_features: feats.view(),
            epsilon: DEFAULT_EPSILON,
        };
        let out = propagate_features(&inputs).unwrap();
        assert_eq!(out.features, feats);
        assert!(out.fallback_points.is_empty());
    }

    #[test]
    fn inverse_distance_ratio() {
        let feats = array![[4.0], [8.0]];
        let inputs = PropagationInputs {
            point_positions: &[[0.0; 3]],
            point_labels: &[3],
            centroid_positions: &[[1.0, 0.0, 0.0], [-3.0, 0.0, 0.0]],
            centroid_labels: &[3, 3],
            centroid_features: feats.view(),
            epsilon: 1e-12,
        };
        let w = propagation_weights(&inputs).unwrap();
        assert!((w[0].0[0].1 - 0.75).abs() < 1e-9 && (w[0].0[1].1 - 0.25).abs() < 1e-9);
        let f = propagate_features(&inputs).unwrap().features;
        assert!((f[[0, 0]] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn unmatched_label_falls_back_to_three_nearest() {
        let feats = array![[1.0], [2.0], [3.0], [100.0]];
        let inputs = PropagationInputs {
            point_positions: &[[0.0; 3]],
            point_labels: &[9],
            centroid_positions: &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [50.0, 0.0, 0.0]],
            centroid_labels: &[0, 1, 2, 3],
            centroid_features: feats.view(),
            epsilon: DEFAULT_EPSILON,
        };
        let out = propagate_features(&inputs).unwrap();
        assert_eq!(out.fallback_points, vec![0]);
        assert!((out.features[[0, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let feats = array![[1.0]];
        let inputs = PropagationInputs {
            point_positions: &[[0.0; 3]],
            point_labels: &[0],
            centroid_positions: &[],
            centroid_labels: &[],
            centroid_features: feats.view(),
            epsilon: DEFAULT_EPSILON,
        };
        assert!(propagate_features(&inputs).is_err());
    }

    #[test]
    fn pooling() {
        let f = array![[1.0, 1.0], [3.0, 5.0], [7.0, 7.0]];
        let part = SuperpointPartition::new(vec![0, 0, 1]).unwrap();
        let pooled = pool_superpoint_features(f.view(), &part).unwrap();
        assert_eq!(pooled, array![[2.0, 3.0], [7.0, 7.0]]);
        let same = Array2::from_elem((5, 3), 0.5);
        let part = SuperpointPartition::new(vec![0, 1, 1, 2, 0]).unwrap();
        assert!(pool_superpoint_features(same.view(), &part).unwrap().iter().all(|&v| v == 0.5));
    }
}
