use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_LAMBDA_L: f64 = 0.5;
pub const DEFAULT_LAMBDA_G: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub mask_ratio: f64,
    /// Student temperature.
    pub tau: f64,
    pub lambda_l: f64,
    pub lambda_g: f64,
    /// Query-decoder heads.
    pub heads: usize,
    /// Masking seed.
    pub seed: u64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            mask_ratio: super::DEFAULT_MASK_RATIO,
            tau: DEFAULT_TAU,
            lambda_l: DEFAULT_LAMBDA_L,
            lambda_g: DEFAULT_LAMBDA_G,
            heads: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub assign: f64,
    pub distill_local: f64,
    pub distill_global: f64,
    pub total: f64,
    pub lambda_l: f64,
    pub lambda_g: f64,
}

fn nonzero_norm(v: ArrayView1<'_, f64>, what: &str) -> Result<f64> {
    let n = v.dot(&v).sqrt();
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::numerical(format!("{what} has zero or non-finite norm")))
    }
}

pub fn cosine_similarity(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let na = nonzero_norm(a, "vector")?;
    let nb = nonzero_norm(b, "vector")?;
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
    }
    out
}

/// `cos(f_n, c_k) / τ` for every feature row and centroid.
pub fn student_logits(features: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>, tau: f64) -> Result<Array2<f64>> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("temperature {tau} must be positive")));
    }
    if features.ncols() != centroids.ncols() {
        return Err(Error::shape(format!(
            "features have width {}, centroids {}",
            features.ncols(),
            centroids.ncols()
        )));
    }
    if centroids.nrows() == 0 {
        return Err(Error::invalid("no centroids"));
    }
    let fnorm = features.rows().into_iter().map(|r| nonzero_norm(r, "feature row")).collect::<Result<Vec<_>>>()?;
    let cnorm = centroids.rows().into_iter().map(|r| nonzero_norm(r, "centroid row")).collect::<Result<Vec<_>>>()?;
    let mut dots = features.dot(&centroids.t());
    for ((i, j), v) in dots.indexed_iter_mut() {
        *v /= fnorm[i] * cnorm[j] * tau;
    }
    Ok(dots)
}

/// Row-wise softmax of temperature-scaled cosine similarities.
pub fn student_assignment(features: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>, tau: f64) -> Result<Array2<f64>> {
    Ok(softmax_rows(student_logits(features, centroids, tau)?.view()))
}

fn check_masked(shape: (usize, usize), other: (usize, usize), masked: &[usize]) -> Result<()> {
    if shape != other {
        return Err(Error::shape(format!("teacher {shape:?} and student {other:?} differ")));
    }
    if masked.is_empty() {
        return Err(Error::invalid("assignment loss needs at least one masked token"));
    }
    if let Some(&bad) = masked.iter().find(|&&m| m >= shape.0) {
        return Err(Error::invalid(format!("masked index {bad} out of range for {} rows", shape.0)));
    }
    Ok(())
}

/// Mean KL divergence `KL(Γᵗ_n ‖ Γ̂ˢ_n)` over the masked rows.
pub fn assignment_loss(teacher: ArrayView2<'_, f64>, student: ArrayView2<'_, f64>, masked: &[usize]) -> Result<f64> {
    check_masked(teacher.dim(), student.dim(), masked)?;
    let mut total = 0.0;
    for &n in masked {
        for (t, s) in teacher.row(n).iter().zip(student.row(n)) {
            if *t == 0.0 {
                continue;
            }
            if *s <= 0.0 {
                return Err(Error::numerical(format!("student assigns zero mass where the teacher does not (row {n})")));
            }
            total += t * (t / s).ln();
        }
    }
    Ok(total / masked.len() as f64)
}

/// Gradient of [`assignment_loss`] with respect to the student's
/// pre-softmax logits; rows outside `masked` are zero.
pub fn assignment_loss_grad_logits(teacher: ArrayView2<'_, f64>, logits: ArrayView2<'_, f64>, masked: &[usize]) -> Result<Array2<f64>> {
    check_masked(teacher.dim(), logits.dim(), masked)?;
    let p = softmax_rows(logits);
    let mut grad = Array2::zeros(logits.dim());
    let scale = 1.0 / masked.len() as f64;
    for &n in masked {
        let mass = teacher.row(n).sum();
        let g = (&p.row(n) * mass - teacher.row(n)) * scale;
        grad.row_mut(n).assign(&g);
    }
    Ok(grad)
}

fn cosine_grad(g: ArrayView1<'_, f64>, e: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
    let ng = nonzero_norm(g, "student feature")?;
    let ne = nonzero_norm(e, "target feature")?;
    let cos = g.dot(&e) / (ng * ne);
    let d = &e / (ng * ne) - &g * (cos / (ng * ng));
    Ok((cos, d))
}

/// `(1/S) Σ_i (1 − cos(gˢ_i, gᵉ_i))`.
pub fn local_distill_loss(student: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<f64> {
    if student.dim() != target.dim() {
        return Err(Error::shape(format!("student {:?} and target {:?} differ", student.dim(), target.dim())));
    }
    if student.nrows() == 0 {
        return Err(Error::invalid("no superpoints to distill"));
    }
    let mut total = 0.0;
    for (g, e) in student.rows().into_iter().zip(target.rows()) {
        total += 1.0 - cosine_similarity(g, e)?;
    }
    Ok(total / student.nrows() as f64)
}

pub fn local_distill_grad(student: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if student.dim() != target.dim() {
        return Err(Error::shape(format!("student {:?} and target {:?} differ", student.dim(), target.dim())));
    }
    let s = student.nrows() as f64;
    let mut grad = Array2::zeros(student.dim());
    for (i, (g, e)) in student.axis_iter(Axis(0)).zip(target.axis_iter(Axis(0))).enumerate() {
        let (_, d) = cosine_grad(g, e)?;
        grad.row_mut(i).assign(&(d * (-1.0 / s)));
    }
    Ok(grad)
}

/// `1 − cos(gˢ_cls, gᵉ_cls)`.
pub fn global_distill_loss(student: ArrayView1<'_, f64>, target: ArrayView1<'_, f64>) -> Result<f64> {
    Ok(1.0 - cosine_similarity(student, target)?)
}

pub fn global_distill_grad(student: ArrayView1<'_, f64>, target: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if student.len() != target.len() {
        return Err(Error::shape(format!("vectors of length {} and {}", student.len(), target.len())));
    }
    Ok(-cosine_grad(student, target)?.1)
}

pub fn total_loss(assign: f64, distill_local: f64, distill_global: f64, lambda_l: f64, lambda_g: f64) -> LossReport {
    LossReport {
        assign,
        distill_local,
        distill_global,
        total: assign + lambda_l * distill_local + lambda_g * distill_global,
        lambda_l,
        lambda_g,
    }
}

/// `θ_t ← m·θ_t + (1 − m)·θ_s`.
pub fn ema_update(teacher: &[f64], student: &[f64], momentum: f64) -> Result<Vec<f64>> {
    if teacher.len() != student.len() {
        return Err(Error::shape(format!("teacher has {} parameters, student {}", teacher.len(), student.len())));
    }
    if !(0.0..=1.0).contains(&momentum) {
        return Err(Error::invalid(format!("momentum {momentum} outside [0, 1]")));
    }
    Ok(teacher.iter().zip(student).map(|(t, s)| momentum * t + (1.0 - momentum) * s).collect())
}

/// Central-difference gradient of `loss` at `params` with step `h`.
pub fn finite_diff_grad<F>(mut loss: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss(&p)?;
        p[i] = orig - h;
        let down = loss(&p)?;
        p[i] = orig;
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::numerical(format!("loss is not finite around coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn student_assignment_cases() {
        let c1 = array![[1.0, 2.0]];
        let f = array![[3.0, -1.0], [0.0, 1.0]];
        assert!(student_assignment(f.view(), c1.view(), 0.1).unwrap().iter().all(|&v| v == 1.0));
        let c2 = array![[1.0, 0.0], [0.0, 1.0]];
        let eq = array![[1.0, 1.0]];
        let a = student_assignment(eq.view(), c2.view(), 0.1).unwrap();
        assert!((a[[0, 0]] - 0.5).abs() < 1e-15);
        let g = array![[0.3, -2.0]];
        let a1 = student_assignment(g.view(), c2.view(), 0.1).unwrap();
        let a2 = student_assignment((&g * 17.5).view(), c2.view(), 0.1).unwrap();
        assert!((&a1 - &a2).iter().all(|d| d.abs() < 1e-12));
        assert!(student_assignment(array![[0.0, 0.0]].view(), c2.view(), 0.1).is_err());
    }

    #[test]
    fn kl_cases() {
        let t = array![[1.0, 0.0]];
        let s = array![[0.5, 0.5]];
        assert!((assignment_loss(t.view(), s.view(), &[0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(assignment_loss(s.view(), s.view(), &[0]).unwrap(), 0.0);
        assert!(assignment_loss(s.view(), t.view(), &[0]).is_err());
        assert!(assignment_loss(s.view(), s.view(), &[]).is_err());
    }

    #[test]
    fn cosine_loss_cases() {
        let a = array![[1.0, 2.0], [0.5, -1.0]];
        assert!(local_distill_loss(a.view(), a.view()).unwrap().abs() < 1e-15);
        assert!((local_distill_loss(a.view(), (-&a).view()).unwrap() - 2.0).abs() < 1e-15);
        let o = array![[-2.0, 1.0], [2.0, 1.0]];
        assert!((local_distill_loss(a.view(), o.view()).unwrap() - 1.0).abs() < 1e-15);
        let v = array![1.0, -3.0, 2.0];
        assert!(global_distill_loss(v.view(), (&v * 4.0).view()).unwrap().abs() < 1e-15);
        assert!((global_distill_loss(v.view(), (-&v).view()).unwrap() - 2.0).abs() < 1e-15);
        assert!((global_distill_loss(array![1.0, 0.0].view(), array![0.0, 2.0].view()).unwrap() - 1.0).abs() < 1e-15);
        assert!(global_distill_loss(v.view(), Array1::zeros(3).view()).is_err());
    }

    #[test]
    fn totals_and_ema() {
        let r = total_loss(1.0, 0.4, 0.2, 0.5, 0.5);
        assert!((r.total - 1.3).abs() < 1e-12);
        assert_eq!(total_loss(2.0, 0.4, 0.2, 0.0, 0.0).total, 2.0);
        assert_eq!(ema_update(&[1.0, 2.0], &[0.0, 0.0], 1.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(ema_update(&[1.0, 2.0], &[3.0, 4.0], 0.0).unwrap(), vec![3.0, 4.0]);
        assert!((ema_update(&[1.0], &[0.0], 0.9).unwrap()[0] - 0.9).abs() < 1e-15);
        assert!(ema_update(&[1.0], &[0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn finite_differences() {
        let g = finite_diff_grad(|p| Ok(p.iter().map(|v| v * v).sum()), &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        let z = finite_diff_grad(|_| Ok(3.0), &[1.0, 2.0, 3.0], 1e-5).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert!(finite_diff_grad(|_| Ok(f64::NAN), &[1.0], 1e-5).is_err());
    }

    #[test]
    fn analytic_gradients_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let teacher = softmax_rows(Array2::from_shape_fn((4, 3), |_| rng.gen_range(-2.0..2.0)).view());
            let logits = Array2::from_shape_fn((4, 3), |_| rng.gen_range(-2.0..2.0));
            let masked = [0, 2, 3];
            let analytic = assignment_loss_grad_logits(teacher.view(), logits.view(), &masked).unwrap();
            let numeric = finite_diff_grad(
                |p| {
                    let z = Array2::from_shape_vec((4, 3), p.to_vec()).unwrap();
                    assignment_loss(teacher.view(), softmax_rows(z.view()).view(), &masked)
                },
                logits.as_slice().unwrap(),
                1e-6,
            )
            .unwrap();
            assert!(rel_close(analytic.as_slice().unwrap(), &numeric, 1e-4));

            let s = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
            let e = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
            let analytic = local_distill_grad(s.view(), e.view()).unwrap();
            let numeric = finite_diff_grad(
                |p| local_distill_loss(Array2::from_shape_vec((5, 4), p.to_vec()).unwrap().view(), e.view()),
                s.as_slice().unwrap(),
                1e-6,
            )
            .unwrap();
            assert!(rel_close(analytic.as_slice().unwrap(), &numeric, 1e-4));

            let gs = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
            let ge = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
            let analytic = global_distill_grad(gs.view(), ge.view()).unwrap();
            let numeric =
                finite_diff_grad(|p| global_distill_loss(ArrayView1::from(p), ge.view()), gs.as_slice().unwrap(), 1e-6).unwrap();
            assert!(rel_close(analytic.as_slice().unwrap(), &numeric, 1e-4));
        }
    }
}
