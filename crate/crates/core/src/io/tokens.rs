use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::features::{decode_feature_matrix, encode_feature_matrix};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::tokenizer::{positional_encoding, GroupingMode, TokenPatch, TokenizerOutput, TokenizerStats};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchRecord {
    center_index: usize,
    superpoint: usize,
    members: Vec<usize>,
    /// First row of this patch in the offsets matrix.
    offset_row: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenDocument {
    mode: GroupingMode,
    normalize: bool,
    radius: f64,
    spacing: f64,
    pe_dim: usize,
    centroid_indices: Vec<usize>,
    centroids: Vec<Point3>,
    offset_width: usize,
    offsets_file: String,
    patches: Vec<PatchRecord>,
    stats: TokenizerStats,
}

/// `tokens.json` → `tokens.offsets.s4f`, next to the JSON file.
pub fn offsets_path(path: &Path) -> PathBuf {
    path.with_extension("offsets.s4f")
}

/// Writes the token JSON and a sibling S4F1 file holding every patch's
/// offset rows concatenated in patch order; `offset_row` in each patch
/// record indexes into it.
pub fn write_tokens(output: &TokenizerOutput, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if output.patches.is_empty() {
        return Err(Error::invalid("refusing to write a token file with no patches"));
    }
    let width = output.patches[0].offset_width;
    if output.patches.iter().any(|p| p.offset_width != width) {
        return Err(Error::shape("patches disagree on offset width"));
    }
    let rows: usize = output.patches.iter().map(TokenPatch::len).sum();
    let mut offsets = Vec::with_capacity(rows * width);
    let mut patches = Vec::with_capacity(output.patches.len());
    let mut row = 0;
    for p in &output.patches {
        if p.offsets.len() != p.len() * width {
            return Err(Error::shape(format!("patch centered at {} has no offsets filled", p.center_index)));
        }
        offsets.extend_from_slice(&p.offsets);
        patches.push(PatchRecord {
            center_index: p.center_index,
            superpoint: p.superpoint,
            members: p.members.clone(),
            offset_row: row,
        });
        row += p.len();
    }
    let side = offsets_path(path);
    let doc = TokenDocument {
        mode: output.mode,
        normalize: output.normalize,
        radius: output.radius,
        spacing: output.spacing,
        pe_dim: output.pe.ncols(),
        centroid_indices: output.centroid_indices.clone(),
        centroids: output.centroids.clone(),
        offset_width: width,
        offsets_file: side
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::invalid(format!("{} has no usable file name", path.display())))?
            .to_string(),
        patches,
        stats: output.stats.clone(),
    };
    let matrix = Array2::from_shape_vec((rows, width), offsets).expect("row count matches");
    fs::write(&side, encode_feature_matrix(matrix.view())?).map_err(|e| Error::io(&side, e))?;
    let json = serde_json::to_vec_pretty(&doc).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Reads a token file written by [`write_tokens`]. Memberships are exact,
/// offsets carry 32-bit precision, the position encoding is recomputed.
pub fn read_tokens(path: impl AsRef<Path>) -> Result<TokenizerOutput> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let doc: TokenDocument =
        serde_json::from_slice(&bytes).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    let side = path.parent().unwrap_or(Path::new("")).join(&doc.offsets_file);
    let offsets = decode_feature_matrix(&fs::read(&side).map_err(|e| Error::io(&side, e))?)?;
    let n = doc.patches.len();
    if n == 0 || doc.centroid_indices.len() != n || doc.centroids.len() != n {
        return Err(Error::shape(format!(
            "{n} patches, {} centroid indices, {} centroids",
            doc.centroid_indices.len(),
            doc.centroids.len()
        )));
    }
    if offsets.ncols() != doc.offset_width {
        return Err(Error::shape(format!("offsets file has {} columns, expected {}", offsets.ncols(), doc.offset_width)));
    }
    let mut patches = Vec::with_capacity(n);
    for (rec, center) in doc.patches.into_iter().zip(&doc.centroids) {
        let end = rec.offset_row + rec.members.len();
        if rec.members.is_empty() || end > offsets.nrows() {
            return Err(Error::shape(format!("patch at {} indexes past the offsets table", rec.center_index)));
        }
        let block = offsets.slice(ndarray::s![rec.offset_row..end, ..]);
        patches.push(TokenPatch {
            center_index: rec.center_index,
            center: *center,
            members: rec.members,
            superpoint: rec.superpoint,
            offsets: block.iter().copied().collect(),
            offset_width: doc.offset_width,
        });
    }
    Ok(TokenizerOutput {
        pe: positional_encoding(&doc.centroids, doc.pe_dim)?,
        stats: TokenizerStats::from_patches(&patches),
        centroid_indices: doc.centroid_indices,
        centroids: doc.centroids,
        patches,
        radius: doc.radius,
        spacing: doc.spacing,
        mode: doc.mode,
        normalize: doc.normalize,
    })
}
