use crate::segmentation::SuperpointPartition;

/// Per-point sampling weights that give every superpoint equal total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights(Vec<f64>);

impl SamplingWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Unnormalized weights for tests of argmax invariance.
    pub fn from_raw(w: Vec<f64>) -> Self {
        Self(w)
    }
}

/// Normalized inverse-frequency weights: `w_i = 1 / (S · n_{ℓ_i})`.
pub fn superpoint_weights(partition: &SuperpointPartition) -> SamplingWeights {
    let s = partition.count() as f64;
    let per_label: Vec<f64> = partition.sizes().iter().map(|&n| 1.0 / (s * n as f64)).collect();
    SamplingWeights(partition.labels().iter().map(|&l| per_label[l]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let w = superpoint_weights(&SuperpointPartition::new(vec![0, 0, 0, 1]).unwrap());
        let expect = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5];
        for (a, b) in w.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = superpoint_weights(&SuperpointPartition::single(8).unwrap());
        assert!(w.as_slice().iter().all(|&x| x == 1.0 / 8.0));
        let w = superpoint_weights(&SuperpointPartition::new(vec![0, 1, 2]).unwrap());
        assert!(w.as_slice().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }
}
