use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"S4F1";
const HEADER_LEN: usize = 12;

/// Decodes an `S4F1` buffer: magic, `u32` rows, `u32` cols (little-endian),
/// then `rows × cols` little-endian `f32` values in row-major order.
pub fn decode_feature_matrix(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse(bytes.len() as u64, "feature file shorter than its 12-byte header"));
    }
    if &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::parse(0, format!("bad magic {:?}, expected \"S4F1\"", String::from_utf8_lossy(&bytes[..4]))));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::parse(4, "declared size overflows"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::parse(
            HEADER_LEN as u64,
            format!("{rows}x{cols} matrix needs {expected} payload bytes, found {}", payload.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::parse((HEADER_LEN + 4 * i) as u64, format!("non-finite value at entry {i}")));
        }
        values.push(v as f64);
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

pub fn encode_feature_matrix(matrix: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
    let (rows, cols) = matrix.dim();
    let rows32 = u32::try_from(rows).map_err(|_| Error::invalid("too many rows for S4F1"))?;
    let cols32 = u32::try_from(cols).map_err(|_| Error::invalid("too many columns for S4F1"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * rows * cols);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&rows32.to_le_bytes());
    out.extend_from_slice(&cols32.to_le_bytes());
    for &v in matrix.iter() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::invalid(format!("value {v} is not representable as a finite f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    decode_feature_matrix(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_feature_matrix(path: impl AsRef<Path>, matrix: ArrayView2<'_, f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_feature_matrix(matrix)?).map_err(|e| Error::io(path, e))
}
