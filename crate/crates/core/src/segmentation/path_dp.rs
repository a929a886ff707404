use crate::error::{Error, Result};

/// Exact ℓ0 Potts segmentation of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegmentation {
    /// Segment id per vertex, increasing along the path.
    pub labels: Vec<usize>,
    /// Start vertex of every segment.
    pub boundaries: Vec<usize>,
    pub energy: f64,
}

/// Globally optimal piecewise-constant fit on a path graph with unit edge
/// weights, by dynamic programming over segment boundaries.
///
/// Segment cost is the within-segment sum of squared deviations from the
/// segment mean; every boundary costs `mu`. `features` holds `dim` values
/// per vertex. Quadratic in the path length.
pub fn path_potts_dp(features: &[f64], dim: usize, mu: f64) -> Result<PathSegmentation> {
    if dim == 0 || !features.len().is_multiple_of(dim) || features.is_empty() {
        return Err(Error::shape("features must hold a positive multiple of dim values"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::invalid("mu must be finite and non-negative"));
    }
    let n = features.len() / dim;
    let row = |i: usize| &features[i * dim..(i + 1) * dim];

    // cost[a][b]: segment covering vertices a..b inclusive, two-pass mean
    let segment_cost = |a: usize, b: usize| -> f64 {
        let len = (b - a + 1) as f64;
        let mut mean = vec![0.0; dim];
        for i in a..=b {
            for (m, x) in mean.iter_mut().zip(row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= len);
        (a..=b)
            .map(|i| row(i).iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
            .sum()
    };

    let mut best = vec![f64::INFINITY; n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        for start in 0..end {
            let penalty = if start > 0 { mu } else { 0.0 };
            let cand = best[start] + segment_cost(start, end - 1) + penalty;
            if cand < best[end] {
                best[end] = cand;
                prev[end] = start;
            }
        }
    }

    let mut boundaries = Vec::new();
    let mut end = n;
    while end > 0 {
        boundaries.push(prev[end]);
        end = prev[end];
    }
    boundaries.reverse();
    let mut labels = vec![0; n];
    for (s, &start) in boundaries.iter().enumerate() {
        let stop = boundaries.get(s + 1).copied().unwrap_or(n);
        labels[start..stop].iter_mut().for_each(|l| *l = s);
    }
    Ok(PathSegmentation {
        labels,
        boundaries,
        energy: best[n],
    })
}
