//! Point clouds, exact neighbor queries, sampling and local shape descriptors.

mod cloud;
mod descriptors;
mod eigen;
pub(crate) mod index;
pub(crate) mod sampling;

pub use cloud::{Attributes, PointCloud};
pub use descriptors::{
    compute_descriptors, default_anchor_count, estimate_normals, GeometricDescriptor,
};
pub use eigen::{eigen_sym3, SymEigen};
pub use index::{Neighbor, SpatialIndex};
pub use sampling::farthest_point_sampling;

pub type Point3 = [f64; 3];

#[inline]
pub fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub(crate) fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
