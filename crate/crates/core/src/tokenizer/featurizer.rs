use crate::error::{Error, Result};

use super::grouping::TokenPatch;

/// Fixed statistics of a patch's offset rows: per-column mean, per-column
/// max, then the population variances of the three coordinate columns.
/// Width is `2 · offset_width + 3`.
pub fn default_featurizer(patch: &TokenPatch) -> Result<Vec<f64>> {
    let w = patch.offset_width;
    let rows = patch.members.len();
    if rows == 0 || w < 3 || patch.offsets.len() != rows * w {
        return Err(Error::invalid("featurizer needs a non-empty patch with filled offsets"));
    }
    let mut mean = vec![0.0; w];
    let mut max = vec![f64::NEG_INFINITY; w];
    for j in 0..rows {
        for (c, &v) in patch.offset_row(j).iter().enumerate() {
            mean[c] += v;
            max[c] = max[c].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let mut var = [0.0; 3];
    for j in 0..rows {
        let row = patch.offset_row(j);
        for a in 0..3 {
            var[a] += (row[a] - mean[a]) * (row[a] - mean[a]);
        }
    }
    let mut out = mean;
    out.extend(max);
    out.extend(var.map(|v| v / rows as f64));
    Ok(out)
}
