use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SinkhornResult {
    /// Transport plan after the last scaling round, before row renormalization.
    pub plan: Array2<f64>,
    /// Row-renormalized plan; every row is a distribution.
    pub gamma: Array2<f64>,
}

/// Entropic balancing of an `N × K` similarity matrix whose masked entries
/// are `-∞`.
///
/// Starts from `exp(S / ε)` (shifted by the global maximum), then for
/// `iters` rounds scales columns to sum `1/K` and rows to sum `1/N`. Masked
/// entries stay exactly zero. Columns without support are left at zero.
pub fn sinkhorn_normalize(similarity: ArrayView2<'_, f64>, epsilon: f64, iters: usize) -> Result<SinkhornResult> {
    let (n, k) = similarity.dim();
    if n == 0 || k == 0 {
        return Err(Error::shape(format!("similarity matrix is {n}x{k}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("sinkhorn epsilon {epsilon} must be positive")));
    }
    if similarity.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::numerical("similarity contains NaN or +inf"));
    }
    for (i, row) in similarity.rows().into_iter().enumerate() {
        if row.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::invalid(format!("row {i} is fully masked")));
        }
    }
    let max = similarity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut plan = similarity.mapv(|s| if s == f64::NEG_INFINITY { 0.0 } else { ((s - max) / epsilon).exp() });
    let col_target = 1.0 / k as f64;
    let row_target = 1.0 / n as f64;
    for _ in 0..iters {
        for mut col in plan.axis_iter_mut(Axis(1)) {
            let sum = col.sum();
            if sum > 0.0 {
                col *= col_target / sum;
            }
        }
        for mut row in plan.axis_iter_mut(Axis(0)) {
            let sum = row.sum();
            if sum > 0.0 {
                row *= row_target / sum;
            }
        }
    }
    let mut gamma = plan.clone();
    for (i, mut row) in gamma.axis_iter_mut(Axis(0)).enumerate() {
        let sum = row.sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::numerical(format!("row {i} underflowed during sinkhorn scaling")));
        }
        row /= sum;
    }
    Ok(SinkhornResult { plan, gamma })
}
