//! Seeded synthetic scenes with per-primitive ground-truth labels.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::rng;

/// A surface to sample points from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Parallelogram `origin + a·u + b·v` for `a, b ∈ [0, 1]`.
    Rectangle { origin: Point3, u: Point3, v: Point3 },
    /// Surface of an axis-aligned box.
    BoxSurface { min: Point3, max: Point3 },
    Sphere { center: Point3, radius: f64 },
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn length(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl Primitive {
    pub fn area(&self) -> f64 {
        match *self {
            Primitive::Rectangle { u, v, .. } => length(cross(u, v)),
            Primitive::BoxSurface { min, max } => {
                let [a, b, c] = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
                2.0 * (a * b + b * c + a * c)
            }
            Primitive::Sphere { radius, .. } => 4.0 * std::f64::consts::PI * radius * radius,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        match *self {
            Primitive::Rectangle { origin, u, v } => {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                [0, 1, 2].map(|k| origin[k] + a * u[k] + b * v[k])
            }
            Primitive::BoxSurface { min, max } => {
                let ext = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
                let faces = [ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[1]];
                let mut pick = rng.gen::<f64>() * (faces[0] + faces[1] + faces[2]);
                let mut axis = 0;
                while axis < 2 && pick >= faces[axis] {
                    pick -= faces[axis];
                    axis += 1;
                }
                let mut p = [0, 1, 2].map(|k| min[k] + rng.gen::<f64>() * ext[k]);
                p[axis] = if rng.gen::<bool>() { max[axis] } else { min[axis] };
                p
            }
            Primitive::Sphere { center, radius } => loop {
                let d: Point3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                let n = length(d);
                if n > 1e-12 {
                    break [0, 1, 2].map(|k| center[k] + radius * d[k] / n);
                }
            },
        }
    }
}

/// A sampled cloud and the index of the primitive each point came from.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    pub labels: Vec<usize>,
}

/// Samples `count` points from each primitive, adds isotropic Gaussian
/// noise of standard deviation `noise`, and labels points by primitive.
pub fn sample_scene(parts: &[(Primitive, usize)], noise: f64, seed: u64) -> Result<SyntheticScene> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise {noise} must be finite and non-negative")));
    }
    let mut rng = rng::seeded(seed);
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    for (label, (prim, count)) in parts.iter().enumerate() {
        for _ in 0..*count {
            let mut p = prim.sample(&mut rng);
            if noise > 0.0 {
                for c in &mut p {
                    *c += noise * rng.sample::<f64, _>(StandardNormal);
                }
            }
            positions.push(p);
            labels.push(label);
        }
    }
    Ok(SyntheticScene {
        cloud: PointCloud::new(positions)?,
        labels,
    })
}

fn split_by_area(prims: &[Primitive], points: usize) -> Vec<(Primitive, usize)> {
    let total: f64 = prims.iter().map(Primitive::area).sum();
    let mut counts: Vec<usize> = prims.iter().map(|p| (points as f64 * p.area() / total).floor() as usize).collect();
    let short = points - counts.iter().sum::<usize>();
    counts[0] += short;
    prims.iter().copied().zip(counts).collect()
}

/// Floor, two boxes and a sphere, about 4 units across, with point counts
/// proportional to surface area.
pub fn indoor_scene(points: usize, noise: f64, seed: u64) -> Result<SyntheticScene> {
    let prims = [
        Primitive::Rectangle { origin: [0.0, 0.0, 0.0], u: [4.0, 0.0, 0.0], v: [0.0, 4.0, 0.0] },
        Primitive::BoxSurface { min: [0.5, 0.5, 0.01], max: [1.3, 1.1, 0.8] },
        Primitive::BoxSurface { min: [2.4, 0.6, 0.01], max: [3.4, 1.4, 0.5] },
        Primitive::Sphere { center: [2.0, 2.8, 0.6], radius: 0.55 },
    ];
    sample_scene(&split_by_area(&prims, points), noise, seed)
}

/// Two unit squares meeting at a right angle along the y axis: `z = 0`
/// for `x ∈ [0, 1]` and `x = 0` for `z ∈ [0, 1]`.
pub fn perpendicular_planes(points: usize, noise: f64, seed: u64) -> Result<SyntheticScene> {
    let half = points / 2;
    sample_scene(
        &[
            (Primitive::Rectangle { origin: [0.0, 0.0, 0.0], u: [1.0, 0.0, 0.0], v: [0.0, 1.0, 0.0] }, points - half),
            (Primitive::Rectangle { origin: [0.0, 0.0, 0.0], u: [0.0, 1.0, 0.0], v: [0.0, 0.0, 1.0] }, half),
        ],
        noise,
        seed,
    )
}

/// Two unit squares `z = 0` and `z = gap`.
pub fn parallel_planes(points: usize, gap: f64, seed: u64) -> Result<SyntheticScene> {
    let half = points / 2;
    sample_scene(
        &[
            (Primitive::Rectangle { origin: [0.0, 0.0, 0.0], u: [1.0, 0.0, 0.0], v: [0.0, 1.0, 0.0] }, points - half),
            (Primitive::Rectangle { origin: [0.0, 0.0, gap], u: [1.0, 0.0, 0.0], v: [0.0, 1.0, 0.0] }, half),
        ],
        0.0,
        seed,
    )
}
