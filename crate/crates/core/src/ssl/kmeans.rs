use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sinkhorn::sinkhorn_normalize;
use crate::error::{Error, Result};
use crate::geometry::{dist2, farthest_point_sampling, Point3};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    /// Spatial assignment radius; `None` defers to the tokenizer radius.
    pub radius: Option<f64>,
    pub iters: usize,
    pub sinkhorn_epsilon: f64,
    pub sinkhorn_iters: usize,
    pub seed: u64,
    /// Keep the per-iteration mask and assignment.
    pub record_trace: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 24,
            radius: None,
            iters: 20,
            sinkhorn_epsilon: 0.05,
            sinkhorn_iters: 3,
            seed: 0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// `K × D`.
    pub centroid_features: Array2<f64>,
    pub centroid_positions: Vec<Point3>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct KMeansIteration {
    /// `N × K` spatial mask after relaxation.
    pub mask: Array2<bool>,
    pub gamma: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Row-stochastic `N × K` soft assignment from the final iteration.
    pub gamma: Array2<f64>,
    pub state: ClusterState,
    /// Rows that had no centroid in range and were tied to the nearest one.
    pub relaxed_rows: usize,
    /// Clusters re-seeded because no point was in range.
    pub reseeded: usize,
    pub trace: Vec<KMeansIteration>,
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Soft K-Means over token features where each token may only be assigned
/// to centroids within `radius` of its position.
///
/// Centroids start at farthest-point-sampled tokens (first index drawn from
/// `seed`). Each iteration builds the spatial mask, re-seeds clusters with
/// no token in range at the token farthest from every centroid, ties tokens
/// with no centroid in range to their nearest centroid, balances masked
/// cosine similarities with Sinkhorn and moves centroid features and
/// positions to their `Γ`-weighted means.
pub fn constrained_kmeans(
    features: ArrayView2<'_, f64>,
    positions: &[Point3],
    radius: f64,
    config: &KMeansConfig,
) -> Result<KMeansResult> {
    let n = features.nrows();
    let k = config.k;
    if positions.len() != n {
        return Err(Error::shape(format!("{n} feature rows but {} positions", positions.len())));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::InsufficientPoints { requested: k, available: n });
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    if features.iter().any(|v| !v.is_finite()) || positions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite kmeans input"));
    }
    let start = rng::seeded(config.seed).gen_range(0..n);
    let init = farthest_point_sampling(positions, k, start)?;
    let mut cf = features.select(ndarray::Axis(0), &init);
    let mut cp: Vec<Point3> = init.iter().map(|&i| positions[i]).collect();
    let r2 = radius * radius;
    let rows: Vec<Vec<f64>> = features.rows().into_iter().map(|r| r.to_vec()).collect();

    let mut gamma = Array2::zeros((n, k));
    let mut relaxed_rows = 0;
    let mut reseeded = 0;
    let mut trace = Vec::new();
    for _ in 0..config.iters.max(1) {
        let mut mask = Array2::from_shape_fn((n, k), |(i, j)| dist2(&positions[i], &cp[j]) <= r2);
        for j in 0..k {
            if mask.column(j).iter().any(|&m| m) {
                continue;
            }
            let far = (0..n)
                .map(|i| (i, cp.iter().map(|c| dist2(&positions[i], c)).fold(f64::INFINITY, f64::min)))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            cp[j] = positions[far];
            cf.row_mut(j).assign(&features.row(far));
            for i in 0..n {
                mask[[i, j]] = dist2(&positions[i], &cp[j]) <= r2;
            }
            reseeded += 1;
        }
        for i in 0..n {
            if mask.row(i).iter().any(|&m| m) {
                continue;
            }
            let nearest = (0..k)
                .map(|j| (j, dist2(&positions[i], &cp[j])))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
                .0;
            mask[[i, nearest]] = true;
            relaxed_rows += 1;
        }
        let centroid_rows: Vec<Vec<f64>> = cf.rows().into_iter().map(|r| r.to_vec()).collect();
        let sim = Array2::from_shape_fn((n, k), |(i, j)| {
            if mask[[i, j]] {
                cosine_or_zero(&rows[i], &centroid_rows[j])
            } else {
                f64::NEG_INFINITY
            }
        });
        gamma = sinkhorn_normalize(sim.view(), config.sinkhorn_epsilon, config.sinkhorn_iters)?.gamma;
        for j in 0..k {
            let col = gamma.column(j);
            let z: f64 = col.sum();
            if z <= 0.0 {
                continue;
            }
            let mut f = ndarray::Array1::zeros(features.ncols());
            let mut p = [0.0; 3];
            for (i, &g) in col.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                f.scaled_add(g, &features.row(i));
                for (a, b) in p.iter_mut().zip(positions[i]) {
                    *a += g * b;
                }
            }
            cf.row_mut(j).assign(&(f / z));
            cp[j] = p.map(|v| v / z);
        }
        if config.record_trace {
            trace.push(KMeansIteration { mask, gamma: gamma.clone() });
        }
    }
    Ok(KMeansResult {
        gamma,
        state: ClusterState { centroid_features: cf, centroid_positions: cp, radius },
        relaxed_rows,
        reseeded,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(k: usize) -> KMeansConfig {
        KMeansConfig { k, record_trace: true, ..KMeansConfig::default() }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos: Vec<Point3> = (0..30).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let feats = Array2::from_shape_fn((30, 4), |_| rng.gen_range(-1.0..1.0));
        let out = constrained_kmeans(feats.view(), &pos, f64::INFINITY, &cfg(1)).unwrap();
        for a in 0..3 {
            let mean = pos.iter().map(|p| p[a]).sum::<f64>() / 30.0;
            assert!((out.state.centroid_positions[0][a] - mean).abs() < 1e-12);
        }
        let mean = feats.mean_axis(ndarray::Axis(0)).unwrap();
        for (c, m) in out.state.centroid_features.row(0).iter().zip(mean.iter()) {
            assert!((c - m).abs() < 1e-12);
        }
        assert!(out.gamma.iter().all(|&g| (g - 1.0).abs() < 1e-15));
    }

    #[test]
    fn mask_respected_and_rows_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pos: Vec<Point3> = (0..60).map(|_| [rng.gen::<f64>() * 4.0, rng.gen(), 0.0]).collect();
        let feats = Array2::from_shape_fn((60, 5), |_| rng.gen_range(-1.0..1.0));
        let out = constrained_kmeans(feats.view(), &pos, 0.8, &cfg(5)).unwrap();
        assert_eq!(out.trace.len(), 20);
        for it in &out.trace {
            for ((i, j), g) in it.gamma.indexed_iter() {
                if !it.mask[[i, j]] {
                    assert_eq!(*g, 0.0);
                }
            }
            for row in it.gamma.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
            }
        }
        let lo = pos.iter().fold([f64::INFINITY; 3], |m, p| [m[0].min(p[0]), m[1].min(p[1]), m[2].min(p[2])]);
        let hi = pos.iter().fold([f64::NEG_INFINITY; 3], |m, p| [m[0].max(p[0]), m[1].max(p[1]), m[2].max(p[2])]);
        for c in &out.state.centroid_positions {
            for a in 0..3 {
                assert!(c[a] >= lo[a] - 1e-12 && c[a] <= hi[a] + 1e-12);
            }
        }
    }

    #[test]
    fn isolated_point_is_relaxed() {
        let pos = vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [10.0, 0.0, 0.0], [0.05, 0.05, 0.0]];
        let feats = Array2::from_shape_fn((5, 2), |(i, j)| (i + j + 1) as f64);
        let out = constrained_kmeans(feats.view(), &pos, 0.5, &cfg(2)).unwrap();
        for row in out.gamma.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        let cfg3 = KMeansConfig { k: 6, ..cfg(6) };
        assert!(constrained_kmeans(feats.view(), &pos, 0.5, &cfg3).is_err());
        assert!(constrained_kmeans(feats.view(), &pos, 0.0, &cfg(2)).is_err());
    }
}
