use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_MASK_RATIO: f64 = 0.6;

/// Split of token indices `0..n` into visible and masked sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPartition {
    /// Ascending.
    pub visible: Vec<usize>,
    /// Ascending.
    pub masked: Vec<usize>,
}

/// `⌊ratio · n⌋`, treating products within 1e-9 of an integer as that
/// integer so that e.g. `0.6 · 5` masks exactly 3.
pub fn masked_count(n: usize, ratio: f64) -> usize {
    let x = ratio * n as f64;
    let nearest = x.round();
    let m = if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest
    } else {
        x.floor()
    };
    (m.max(0.0) as usize).min(n)
}

/// Masks a uniform random subset of `⌊ratio · n⌋` tokens; the remaining
/// `⌈(1 − ratio) · n⌉` stay visible.
pub fn random_mask(n: usize, ratio: f64, seed: u64) -> Result<MaskPartition> {
    if n == 0 {
        return Err(Error::invalid("cannot mask an empty token set"));
    }
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::invalid(format!("mask ratio {ratio} outside [0, 1)")));
    }
    let m = masked_count(n, ratio);
    let mut is_masked = vec![false; n];
    for i in sample(&mut rng::seeded(seed), n, m) {
        is_masked[i] = true;
    }
    let (masked, visible): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_masked[i]);
    Ok(MaskPartition { visible, masked })
}
