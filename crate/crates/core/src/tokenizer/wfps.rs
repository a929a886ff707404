use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::sampling::weighted_farthest;
use crate::geometry::Point3;
use crate::rng;

use super::weights::SamplingWeights;

/// Sign of the weight exponent in the WFPS criterion `D_i · w_i^(±γ)`.
///
/// `Positive` favors points of small superpoints (inverse-frequency weights
/// are large there); `Negative` is the literal alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentSign {
    #[default]
    Positive,
    Negative,
}

/// First WFPS index: a draw from `Multinomial(w)` on a stream seeded by `seed`.
pub fn draw_first_index(weights: &SamplingWeights, seed: u64) -> Result<usize> {
    let dist = WeightedIndex::new(weights.as_slice())
        .map_err(|e| Error::invalid(format!("sampling weights unusable: {e}")))?;
    Ok(dist.sample(&mut rng::seeded(seed)))
}

/// Weighted farthest point sampling.
///
/// The first index is drawn from the weights; each further index maximizes
/// `D_i · w_i^(±γ)` over unselected points, where `D_i` is the squared
/// distance to the nearest selected point. Ties go to the lowest index.
pub fn weighted_fps(
    points: &[Point3],
    weights: &SamplingWeights,
    n: usize,
    gamma: f64,
    seed: u64,
    sign: ExponentSign,
) -> Result<Vec<usize>> {
    if weights.len() != points.len() {
        return Err(Error::shape("one sampling weight per point required"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    if n > points.len() {
        return Err(Error::InsufficientPoints {
            requested: n,
            available: points.len(),
        });
    }
    let first = draw_first_index(weights, seed)?;
    let exponent = match sign {
        ExponentSign::Positive => gamma,
        ExponentSign::Negative => -gamma,
    };
    let factors: Vec<f64> = weights.as_slice().iter().map(|w| w.powf(exponent)).collect();
    weighted_farthest(points, n, first, Some(&factors))
}
