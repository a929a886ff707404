use rayon::prelude::*;

use crate::error::{Error, Result};

use super::eigen::eigen_sym3;
use super::sampling::farthest_point_sampling;
use super::{sub, Point3, PointCloud, SpatialIndex};

const DEFAULT_NORMAL: Point3 = [0.0, 0.0, 1.0];

/// Surface normal plus linearity / planarity / scattering of a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricDescriptor {
    pub normal: Point3,
    /// `[f1, f2, f3]`, non-negative and summing to one.
    pub shape: [f64; 3],
    /// Covariance eigenvalues, descending.
    pub eigenvalues: [f64; 3],
}

impl GeometricDescriptor {
    const DEGENERATE: Self = Self {
        normal: DEFAULT_NORMAL,
        shape: [0.0, 0.0, 1.0],
        eigenvalues: [0.0; 3],
    };

    /// The 6-vector `[normal, f1, f2, f3]`.
    pub fn feature(&self) -> [f64; 6] {
        let [nx, ny, nz] = self.normal;
        let [f1, f2, f3] = self.shape;
        [nx, ny, nz, f1, f2, f3]
    }

    fn from_covariance(cov: &[[f64; 3]; 3]) -> Self {
        let eig = match eigen_sym3(cov) {
            Ok(e) => e,
            Err(_) => return Self::DEGENERATE,
        };
        let l = eig.values.map(|v| v.max(0.0));
        if l[0] <= 0.0 {
            return Self::DEGENERATE;
        }
        Self {
            normal: orient(eig.vectors[2]),
            shape: [(l[0] - l[1]) / l[0], (l[1] - l[2]) / l[0], l[2] / l[0]],
            eigenvalues: l,
        }
    }
}

/// Sign convention: the largest-magnitude component is made positive
/// (first such component on ties).
pub(crate) fn orient(v: Point3) -> Point3 {
    let mut axis = 0;
    for a in 1..3 {
        if v[a].abs() > v[axis].abs() {
            axis = a;
        }
    }
    if v[axis] < 0.0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

/// Anchor count used when none is configured: a quarter of the cloud, but
/// never fewer than `k` (and never more than the cloud).
pub fn default_anchor_count(h: usize, k: usize) -> usize {
    (h / 4).max(k).min(h)
}

/// Per-point normals from the centered covariance of the `k` nearest
/// neighbors (the point included).
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<Vec<Point3>> {
    if k < 3 {
        return Err(Error::invalid("normal estimation needs k >= 3"));
    }
    let pts = cloud.positions();
    let index = SpatialIndex::new(pts)?;
    if k > pts.len() {
        return Err(Error::InsufficientPoints {
            requested: k,
            available: pts.len(),
        });
    }
    pts.par_iter()
        .map(|p| {
            let nbrs = index.knn(p, k)?;
            let mut mean = [0.0; 3];
            for n in &nbrs {
                for a in 0..3 {
                    mean[a] += pts[n.index][a];
                }
            }
            mean = mean.map(|m| m / k as f64);
            let mut cov = [[0.0; 3]; 3];
            for n in &nbrs {
                accumulate_outer(&mut cov, &sub(&pts[n.index], &mean));
            }
            let d = GeometricDescriptor::from_covariance(&scale_cov(cov, k));
            Ok(d.normal)
        })
        .collect()
}

/// Eigenvalue descriptors over FPS anchors.
///
/// `anchor_count` anchors are chosen by farthest point sampling from point 0.
/// For each point `p` with nearest anchors `q_1..q_k`, the 3×3 matrix
/// `(1/k) Σ (q_j − p)(q_j − p)ᵀ` is decomposed. A zero matrix yields the
/// degenerate descriptor `(0, 0, 1)` with normal `+z`.
pub fn compute_descriptors(
    cloud: &PointCloud,
    anchor_count: usize,
    k: usize,
) -> Result<Vec<GeometricDescriptor>> {
    if k < 3 {
        return Err(Error::invalid("descriptor neighborhoods need k >= 3"));
    }
    if anchor_count < k {
        return Err(Error::invalid(format!(
            "anchor count {anchor_count} is smaller than neighborhood size {k}"
        )));
    }
    let pts = cloud.positions();
    let anchors_idx = farthest_point_sampling(pts, anchor_count, 0)?;
    let anchors: Vec<Point3> = anchors_idx.iter().map(|&i| pts[i]).collect();
    let index = SpatialIndex::new(&anchors)?;
    pts.par_iter()
        .map(|p| {
            let nbrs = index.knn(p, k)?;
            let mut cov = [[0.0; 3]; 3];
            for n in &nbrs {
                accumulate_outer(&mut cov, &sub(&anchors[n.index], p));
            }
            Ok(GeometricDescriptor::from_covariance(&scale_cov(cov, k)))
        })
        .collect()
}

fn accumulate_outer(cov: &mut [[f64; 3]; 3], d: &Point3) {
    for r in 0..3 {
        for c in r..3 {
            cov[r][c] += d[r] * d[c];
        }
    }
}

fn scale_cov(mut cov: [[f64; 3]; 3], k: usize) -> [[f64; 3]; 3] {
    let inv = 1.0 / k as f64;
    for r in 0..3 {
        for c in r..3 {
            cov[r][c] *= inv;
            cov[c][r] = cov[r][c];
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian<R: Rng>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    fn grid_plane(n: usize) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push([i as f64 * 0.1 + 0.013 * j as f64, j as f64 * 0.1, 0.0]);
            }
        }
        pts
    }

    #[test]
    fn plane_normals() {
        let cloud = PointCloud::new(grid_plane(12)).unwrap();
        for n in estimate_normals(&cloud, 8).unwrap() {
            assert!((n[2] - 1.0).abs() < 1e-12 && n[0].abs() < 1e-12 && n[1].abs() < 1e-12);
        }
        let moved: Vec<Point3> = grid_plane(12).iter().map(|p| [5.0, p[0], p[1]]).collect();
        for n in estimate_normals(&PointCloud::new(moved).unwrap(), 8).unwrap() {
            assert!((n[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_neighborhood_defaults_to_up() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]; 5]).unwrap();
        assert_eq!(estimate_normals(&cloud, 3).unwrap(), vec![[0.0, 0.0, 1.0]; 5]);
        let d = compute_descriptors(&cloud, 4, 3).unwrap();
        assert!(d.iter().all(|d| d.shape == [0.0, 0.0, 1.0] && d.normal == DEFAULT_NORMAL));
    }

    #[test]
    fn noisy_tilted_plane_normals_within_five_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = {
            let n = [1.0, 2.0, 3.0];
            let l = (14.0f64).sqrt();
            orient([n[0] / l, n[1] / l, n[2] / l])
        };
        let u = [2.0 / 5f64.sqrt(), -1.0 / 5f64.sqrt(), 0.0];
        let v = [truth[1] * u[2] - truth[2] * u[1], truth[2] * u[0] - truth[0] * u[2], truth[0] * u[1] - truth[1] * u[0]];
        // noise relative to the extent of a 16-neighborhood (about 0.1 at
        // this density), not of the whole cloud
        let extent = 1.0;
        let neighborhood_extent = 0.1;
        let sigma = 0.01 * neighborhood_extent;
        let pts: Vec<Point3> = (0..2000)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..extent);
                let b: f64 = rng.gen_range(0.0..extent);
                let e = sigma * gaussian(&mut rng);
                [0, 1, 2].map(|c| a * u[c] + b * v[c] + e * truth[c])
            })
            .collect();
        let normals = estimate_normals(&PointCloud::new(pts).unwrap(), 16).unwrap();
        for n in normals {
            let cos = (n[0] * truth[0] + n[1] * truth[1] + n[2] * truth[2]).abs().min(1.0);
            assert!(cos.acos().to_degrees() < 5.0, "deviation {}", cos.acos().to_degrees());
        }
    }

    #[test]
    fn orientation_convention() {
        assert_eq!(orient([0.1, -0.9, 0.2]), [-0.1, 0.9, -0.2]);
        assert_eq!(orient([-0.5, 0.5, 0.0]), [0.5, -0.5, -0.0]);
    }

    #[test]
    fn collinear_is_pure_linearity() {
        let pts: Vec<Point3> = (0..40).map(|i| [0.3 * i as f64, 0.1 * i as f64, -0.2 * i as f64]).collect();
        for d in compute_descriptors(&PointCloud::new(pts).unwrap(), 20, 6).unwrap() {
            assert!((d.shape[0] - 1.0).abs() < 1e-9 && d.shape[1].abs() < 1e-9 && d.shape[2].abs() < 1e-9);
        }
    }

    /// Integer lattice points within radius `r` in the xy-plane (or in 3D).
    fn lattice(r: i32, planar: bool) -> Vec<Point3> {
        let mut pts = vec![[0.0; 3]];
        let zr = if planar { 0 } else { r };
        for x in -r..=r {
            for y in -r..=r {
                for z in -zr..=zr {
                    if (x, y, z) != (0, 0, 0) && x * x + y * y + z * z <= r * r {
                        pts.push([x as f64, y as f64, z as f64]);
                    }
                }
            }
        }
        pts
    }

    #[test]
    fn isotropic_disk_is_planar() {
        let pts = lattice(10, true);
        let h = pts.len();
        let d = compute_descriptors(&PointCloud::new(pts).unwrap(), h, h).unwrap();
        let c = d[0].shape;
        assert!(c[0].abs() < 0.05 && (c[1] - 1.0).abs() < 0.05 && c[2].abs() < 0.05, "{c:?}");
        assert!((d[0].normal[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_ball_is_scattered() {
        let pts = lattice(6, false);
        let h = pts.len();
        let d = compute_descriptors(&PointCloud::new(pts).unwrap(), h, h).unwrap();
        let c = d[0].shape;
        assert!(c[0].abs() < 0.05 && c[1].abs() < 0.05 && (c[2] - 1.0).abs() < 0.05, "{c:?}");
    }

    #[test]
    fn descriptor_sums_to_one_and_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point3> = (0..400)
            .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.1)])
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let base = compute_descriptors(&cloud, 100, 10).unwrap();
        for d in &base {
            assert!((d.shape.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(d.shape.iter().all(|f| (0.0..=1.0).contains(f)));
        }
        for c in [0.01, 100.0] {
            let scaled = compute_descriptors(&cloud.scaled(c).unwrap(), 100, 10).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                for j in 0..3 {
                    assert!((a.shape[j] - b.shape[j]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let cloud = PointCloud::new(grid_plane(4)).unwrap();
        assert!(estimate_normals(&cloud, 2).is_err());
        assert!(estimate_normals(&cloud, 17).is_err());
        assert!(compute_descriptors(&cloud, 4, 5).is_err());
        assert!(compute_descriptors(&cloud, 17, 5).is_err());
    }
}
