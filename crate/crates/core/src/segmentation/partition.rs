use crate::error::{Error, Result};

/// Per-point superpoint labels in `0..S` with their sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpointPartition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl SuperpointPartition {
    /// Validates that labels cover `0..S` with no gaps.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition must label at least one point"));
        }
        let s = labels.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; s];
        for &l in &labels {
            sizes[l] += 1;
        }
        if let Some(missing) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "label {missing} is unused; labels must form the contiguous range 0..{s}"
            )));
        }
        Ok(Self { labels, sizes })
    }

    /// Relabels arbitrary integer labels to `0..S` in order of first
    /// occurrence.
    pub fn from_raw_labels<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self::new(labels)
    }

    /// A single superpoint covering `h` points.
    pub fn single(h: usize) -> Result<Self> {
        Self::new(vec![0; h])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Members of every superpoint, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Same grouping as `other`, ignoring label names.
    pub fn equivalent(&self, other: &Self) -> bool {
        if self.len() != other.len() || self.count() != other.count() {
            return false;
        }
        let mut fwd = vec![usize::MAX; self.count()];
        let mut bwd = vec![usize::MAX; other.count()];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            if fwd[a] == usize::MAX && bwd[b] == usize::MAX {
                fwd[a] = b;
                bwd[b] = a;
            } else if fwd[a] != b || bwd[b] != a {
                return false;
            }
        }
        true
    }
}
