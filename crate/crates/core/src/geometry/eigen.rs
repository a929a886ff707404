use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 20;
const OFF_TOLERANCE: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Eigen-decomposition of a symmetric 3×3 matrix.
///
/// `values` are descending; `vectors[j]` is the unit eigenvector for
/// `values[j]`, and the three vectors are orthonormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

impl SymEigen {
    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3)
                    .map(|j| self.values[j] * self.vectors[j][r] * self.vectors[j][c])
                    .sum();
            }
        }
        out
    }
}

fn frobenius(a: &[[f64; 3]; 3]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cyclic Jacobi eigen-solver for symmetric 3×3 matrices.
pub fn eigen_sym3(matrix: &[[f64; 3]; 3]) -> Result<SymEigen> {
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let scale = frobenius(matrix);
    for (r, c) in [(0, 1), (0, 2), (1, 2)] {
        if (matrix[r][c] - matrix[c][r]).abs() > SYMMETRY_TOLERANCE * scale.max(1.0) {
            return Err(Error::invalid(format!(
                "matrix is not symmetric: a[{r}][{c}] = {} but a[{c}][{r}] = {}",
                matrix[r][c], matrix[c][r]
            )));
        }
    }

    let mut a = *matrix;
    for r in 0..3 {
        for c in r + 1..3 {
            let m = 0.5 * (a[r][c] + a[c][r]);
            a[r][c] = m;
            a[c][r] = m;
        }
    }
    // v[r][c]: row r of the accumulated rotation; columns are eigenvectors
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    for _ in 0..MAX_SWEEPS {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        if off <= OFF_TOLERANCE * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- Jᵀ A J with J the (p, q) Givens rotation
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let vectors = order.map(|j| [v[0][j], v[1][j], v[2][j]]);
    Ok(SymEigen { values, vectors })
}
