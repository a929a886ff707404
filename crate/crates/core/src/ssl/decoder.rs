use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DecoderOutput {
    /// `|ℳ| × D` reconstructed features.
    pub output: Array2<f64>,
    /// Per head, the `|ℳ| × |V|` attention matrix.
    pub attention: Vec<Array2<f64>>,
}

/// Cross-attention of masked queries onto visible features without learned
/// projections: per head slice `h`,
/// `softmax((Q_h + E_h) F_hᵀ / √D_h) F_h` with `D_h = D / heads`.
pub fn query_decoder_forward(
    queries: ArrayView2<'_, f64>,
    pos: ArrayView2<'_, f64>,
    visible: ArrayView2<'_, f64>,
    heads: usize,
) -> Result<DecoderOutput> {
    if visible.nrows() == 0 {
        return Err(Error::invalid("query decoder needs at least one visible token"));
    }
    if queries.dim() != pos.dim() {
        return Err(Error::shape(format!(
            "queries {:?} and position embeddings {:?} differ",
            queries.dim(),
            pos.dim()
        )));
    }
    let d = queries.ncols();
    if visible.ncols() != d {
        return Err(Error::shape(format!("queries have width {d}, visible features {}", visible.ncols())));
    }
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(Error::invalid(format!("width {d} is not divisible by {heads} heads")));
    }
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = &queries + &pos;
    let mut output = Array2::zeros((queries.nrows(), d));
    let mut attention = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let qh = q.slice(cols);
        let fh = visible.slice(cols);
        let mut scores = qh.dot(&fh.t()) * scale;
        for mut row in scores.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row /= total;
        }
        output.slice_mut(cols).assign(&scores.dot(&fh));
        attention.push(scores);
    }
    Ok(DecoderOutput { output, attention })
}
