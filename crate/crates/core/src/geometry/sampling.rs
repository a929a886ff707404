use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

use super::{dist2, Point3, SpatialIndex};

/// Greedy farthest point sampling.
///
/// Starts at `start`; each further pick is the unselected point whose
/// minimum squared distance to the selected set is largest, ties going to
/// the lowest index.
pub fn farthest_point_sampling(points: &[Point3], n: usize, start: usize) -> Result<Vec<usize>> {
    weighted_farthest(points, n, start, None)
}

/// Shared FPS loop; `factors` (non-negative) multiplies each point's
/// distance before the argmax when present.
///
/// Distances are refreshed only inside the ball that can still change
/// them, found with a k-d tree; the argmax comes from a lazily updated
/// max-heap.
pub(crate) fn weighted_farthest(
    points: &[Point3],
    n: usize,
    start: usize,
    factors: Option<&[f64]>,
) -> Result<Vec<usize>> {
    let h = points.len();
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if n > h {
        return Err(Error::InsufficientPoints {
            requested: n,
            available: h,
        });
    }
    if start >= h {
        return Err(Error::invalid(format!("start index {start} out of range for {h} points")));
    }
    if let Some(f) = factors {
        if f.len() != h {
            return Err(Error::shape("one weight factor per point required"));
        }
    }

    let score = |i: usize, d: f64| match factors {
        Some(f) => d * f[i],
        None => d,
    };
    let mut selected = vec![false; h];
    let mut min_d = vec![f64::INFINITY; h];
    let mut out = Vec::with_capacity(n);
    selected[start] = true;
    out.push(start);
    if n == 1 {
        return Ok(out);
    }
    let anchor = points[start];
    let mut by_score = BinaryHeap::with_capacity(h);
    let mut by_dist = BinaryHeap::new();
    for (i, p) in points.iter().enumerate() {
        min_d[i] = dist2(p, &anchor);
        if !selected[i] {
            by_score.push(Entry::new(score(i, min_d[i]), i));
            if factors.is_some() {
                by_dist.push(Entry::new(min_d[i], i));
            }
        }
    }
    let index = SpatialIndex::new(points)?;
    while out.len() < n {
        let current = loop {
            let top = by_score.pop().expect("an unselected point remains");
            if !selected[top.index] && top.key == score(top.index, min_d[top.index]) {
                break top.index;
            }
        };
        selected[current] = true;
        out.push(current);
        if out.len() == n {
            break;
        }
        // only points closer to the new pick than their current distance
        // change, and every unselected distance is at most the largest one
        let reach = match factors {
            None => min_d[current],
            Some(_) => loop {
                let Some(top) = by_dist.peek() else { break 0.0 };
                if !selected[top.index] && top.key == min_d[top.index] {
                    break top.key;
                }
                by_dist.pop();
            },
        };
        let anchor = points[current];
        index.for_each_within(&anchor, reach, &mut |i, d| {
            if d < min_d[i] {
                min_d[i] = d;
                if !selected[i] {
                    by_score.push(Entry::new(score(i, d), i));
                    if factors.is_some() {
                        by_dist.push(Entry::new(d, i));
                    }
                }
            }
        });
    }
    Ok(out)
}

/// Max-heap entry ordered by key, then by ascending index.
#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    index: usize,
}

impl Entry {
    fn new(key: f64, index: usize) -> Self {
        Self { key, index }
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(other.index.cmp(&self.index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook FPS: recompute every candidate's distance to the whole
    /// selected set at each step.
    fn naive_fps(points: &[Point3], n: usize, start: usize) -> Vec<usize> {
        let mut sel = vec![start];
        while sel.len() < n {
            let mut best = None;
            let mut best_d = -1.0;
            for i in 0..points.len() {
                if sel.contains(&i) {
                    continue;
                }
                let d = sel
                    .iter()
                    .map(|&s| dist2(&points[i], &points[s]))
                    .fold(f64::INFINITY, f64::min);
                if d > best_d {
                    best_d = d;
                    best = Some(i);
                }
            }
            sel.push(best.unwrap());
        }
        sel
    }

    /// Linear-scan weighted FPS.
    fn linear_weighted(points: &[Point3], n: usize, start: usize, f: &[f64]) -> Vec<usize> {
        let mut sel = vec![false; points.len()];
        let mut min_d = vec![f64::INFINITY; points.len()];
        let mut out = vec![start];
        sel[start] = true;
        let mut cur = start;
        while out.len() < n {
            let mut best = None;
            let mut best_s = f64::NEG_INFINITY;
            for i in 0..points.len() {
                min_d[i] = min_d[i].min(dist2(&points[i], &points[cur]));
                if !sel[i] && (best.is_none() || min_d[i] * f[i] > best_s) {
                    best = Some(i);
                    best_s = min_d[i] * f[i];
                }
            }
            cur = best.unwrap();
            sel[cur] = true;
            out.push(cur);
        }
        out
    }

    #[test]
    fn weighted_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            // a coarse grid produces many exact distance ties
            let pts: Vec<Point3> = (0..400)
                .map(|_| [rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64, rng.gen_range(0..3) as f64])
                .collect();
            let f: Vec<f64> = (0..400).map(|i| if trial % 2 == 0 { 1.0 } else { 1.0 + (i % 5) as f64 }).collect();
            let start = rng.gen_range(0..400);
            let n = rng.gen_range(1..=400);
            assert_eq!(weighted_farthest(&pts, n, start, Some(&f)).unwrap(), linear_weighted(&pts, n, start, &f));
            if trial % 2 == 0 {
                assert_eq!(farthest_point_sampling(&pts, n, start).unwrap(), linear_weighted(&pts, n, start, &f));
            }
        }
    }

    #[test]
    fn unit_square_farthest_corner() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert_eq!(farthest_point_sampling(&pts, 2, 0).unwrap(), vec![0, 3]);
    }

    #[test]
    fn exhaustion_is_permutation() {
        let pts = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let mut s = farthest_point_sampling(&pts, 5, 1).unwrap();
        assert_eq!(s[0], 1);
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn errors() {
        let pts = [[0.0; 3], [1.0; 3]];
        assert!(farthest_point_sampling(&pts, 3, 0).is_err());
        assert!(farthest_point_sampling(&pts, 1, 2).is_err());
        assert!(farthest_point_sampling(&pts, 0, 0).is_err());
    }

    #[test]
    fn matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point3> = (0..300).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        for start in [0, 57, 299] {
            assert_eq!(farthest_point_sampling(&pts, 32, start).unwrap(), naive_fps(&pts, 32, start));
        }
    }
}
