use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, SpatialIndex};

use super::grouping::TokenPatch;

/// Shared grouping radius from centroid spacing.
///
/// `s` is the mean over centroids of the distance to the nearest other
/// centroid (coincident centroids contribute zero); `r = alpha · s`.
/// Returns `(r, s)`.
pub fn estimate_radius(centroids: &[Point3], alpha: f64) -> Result<(f64, f64)> {
    if centroids.len() < 2 {
        return Err(Error::invalid(
            "radius estimation needs at least two centroids (spacing is undefined for one)",
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive and finite, got {alpha}")));
    }
    let index = SpatialIndex::new(centroids)?;
    let mut total = 0.0;
    for (t, c) in centroids.iter().enumerate() {
        let nn = index.knn(c, 2)?;
        let other = nn.iter().find(|n| n.index != t).expect("two neighbors requested");
        total += other.dist2.sqrt();
    }
    let s = total / centroids.len() as f64;
    Ok((alpha * s, s))
}

/// Fills the patch's offset rows with `[(p_j − center) / r, x_j]`, or with
/// raw offsets `[p_j − center, x_j]` when `normalize` is off.
pub fn normalize_patch(cloud: &PointCloud, mut patch: TokenPatch, r: f64, normalize: bool) -> Result<TokenPatch> {
    if normalize && !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("normalization needs a positive finite radius, got {r}")));
    }
    let width = 3 + cloud.attribute_dim();
    let mut offsets = Vec::with_capacity(patch.members.len() * width);
    for &m in &patch.members {
        let p = cloud.position(m);
        for a in 0..3 {
            let d = p[a] - patch.center[a];
            offsets.push(if normalize { d / r } else { d });
        }
        offsets.extend_from_slice(cloud.attribute_row(m));
    }
    patch.offsets = offsets;
    patch.offset_width = width;
    Ok(patch)
}

/// Frequency band multipliers `2^l · π / σ` for `l = 0..pe_dim/6`.
fn bands(sigma: f64, pe_dim: usize) -> Vec<f64> {
    (0..pe_dim / 6)
        .map(|l| (1u64 << l.min(62)) as f64 * std::f64::consts::PI / sigma)
        .collect()
}

/// Sinusoidal encoding of each centroid's offset from the mean centroid.
///
/// Row layout: `sin(ω_l Δp)` for every band (3 values each), then
/// `cos(ω_l Δp)` for every band. `σ` is the largest axis-aligned extent of
/// the centroids (1 when they all coincide).
pub fn positional_encoding(centroids: &[Point3], pe_dim: usize) -> Result<Array2<f64>> {
    if pe_dim == 0 || !pe_dim.is_multiple_of(6) {
        return Err(Error::invalid(format!("pe_dim must be a positive multiple of 6, got {pe_dim}")));
    }
    if centroids.is_empty() {
        return Err(Error::invalid("positional encoding needs at least one centroid"));
    }
    let n = centroids.len() as f64;
    let mut mean = [0.0; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in centroids {
        for a in 0..3 {
            mean[a] += c[a];
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    mean = mean.map(|m| m / n);
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    let sigma = if extent > 0.0 { extent } else { 1.0 };
    let omegas = bands(sigma, pe_dim);
    let half = pe_dim / 2;

    let mut pe = Array2::zeros((centroids.len(), pe_dim));
    for (row, c) in pe.rows_mut().into_iter().zip(centroids) {
        let mut row = row;
        let delta = [c[0] - mean[0], c[1] - mean[1], c[2] - mean[2]];
        for (l, w) in omegas.iter().enumerate() {
            for a in 0..3 {
                let phase = w * delta[a];
                row[3 * l + a] = phase.sin();
                row[half + 3 * l + a] = phase.cos();
            }
        }
    }
    Ok(pe)
}
