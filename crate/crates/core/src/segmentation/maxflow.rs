//! Dinic max-flow / min-cut on real capacities.

use std::collections::VecDeque;

/// Result of a minimum s-t cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    /// Total capacity of arcs from the source side to the sink side.
    pub value: f64,
    /// Value of the maximum flow found (equal to `value` up to rounding).
    pub flow: f64,
    /// `true` for vertices on the source side.
    pub source_side: Vec<bool>,
}

/// Flow network over `n` inner vertices plus implicit source and sink.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    original: Vec<f64>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            head: vec![Vec::new(); n + 2],
            to: Vec::new(),
            cap: Vec::new(),
            original: Vec::new(),
        }
    }

    fn source(&self) -> usize {
        self.n
    }

    fn sink(&self) -> usize {
        self.n + 1
    }

    fn arc_pair(&mut self, u: usize, v: usize, forward: f64, backward: f64) {
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(forward);
        self.original.push(forward);
        self.head[u].push(e);
        self.to.push(u);
        self.cap.push(backward);
        self.original.push(backward);
        self.head[v].push(e + 1);
    }

    /// Capacity `source_cap` from the source to `v` and `sink_cap` from `v`
    /// to the sink. Negative values are clamped to zero.
    pub fn add_terminal(&mut self, v: usize, source_cap: f64, sink_cap: f64) {
        assert!(v < self.n, "vertex {v} out of range");
        let (s, t) = (self.source(), self.sink());
        if source_cap > 0.0 {
            self.arc_pair(s, v, source_cap, 0.0);
        }
        if sink_cap > 0.0 {
            self.arc_pair(v, t, sink_cap, 0.0);
        }
    }

    /// Arc `u → v` with `cap_uv` and `v → u` with `cap_vu`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: f64, cap_vu: f64) {
        assert!(u < self.n && v < self.n, "edge ({u}, {v}) out of range");
        self.arc_pair(u, v, cap_uv.max(0.0), cap_vu.max(0.0));
    }

    pub fn min_cut(mut self) -> MinCut {
        let (s, t) = (self.source(), self.sink());
        let total = self.original.iter().copied().fold(0.0, f64::max);
        let eps = total * 1e-14;
        let nodes = self.n + 2;
        let mut start = Vec::with_capacity(nodes + 1);
        let mut arcs = Vec::with_capacity(self.to.len());
        start.push(0);
        for list in &self.head {
            arcs.extend_from_slice(list);
            start.push(arcs.len());
        }
        self.head = Vec::new();
        let mut level = vec![usize::MAX; nodes];
        let mut iter = vec![0usize; nodes];
        let mut flow = 0.0;
        let mut queue = VecDeque::new();
        let mut path: Vec<usize> = Vec::new();

        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            queue.clear();
            queue.push_back(s);
            'bfs: while let Some(u) = queue.pop_front() {
                for &e in &arcs[start[u]..start[u + 1]] {
                    let v = self.to[e];
                    if self.cap[e] > eps && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        if v == t {
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
            if level[t] == usize::MAX {
                break;
            }
            iter.copy_from_slice(&start[..nodes]);

            // blocking flow by iterative DFS with current-arc pointers
            path.clear();
            let mut u = s;
            loop {
                if u == t {
                    let push = path
                        .iter()
                        .map(|&e| self.cap[e])
                        .fold(f64::INFINITY, f64::min);
                    let mut retreat = path.len();
                    for (k, &e) in path.iter().enumerate() {
                        self.cap[e] -= push;
                        self.cap[e ^ 1] += push;
                        if retreat == path.len() && self.cap[e] <= eps {
                            retreat = k;
                        }
                    }
                    flow += push;
                    u = if retreat == 0 { s } else { self.to[path[retreat - 1]] };
                    path.truncate(retreat);
                    continue;
                }
                let mut advanced = false;
                while iter[u] < start[u + 1] {
                    let e = arcs[iter[u]];
                    let v = self.to[e];
                    if self.cap[e] > eps && level[v] == level[u] + 1 {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    iter[u] += 1;
                }
                if advanced {
                    continue;
                }
                if u == s {
                    break;
                }
                level[u] = usize::MAX;
                let e = path.pop().expect("non-source vertex reached by a path arc");
                u = self.to[e ^ 1];
                iter[u] += 1;
            }
        }

        let mut source_side = vec![false; nodes];
        source_side[s] = true;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &arcs[start[u]..start[u + 1]] {
                let v = self.to[e];
                if self.cap[e] > eps && !source_side[v] {
                    source_side[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let mut value = 0.0;
        for u in 0..nodes {
            if !source_side[u] {
                continue;
            }
            for &e in &arcs[start[u]..start[u + 1]] {
                if !source_side[self.to[e]] {
                    value += self.original[e];
                }
            }
        }
        source_side.truncate(self.n);
        MinCut {
            value,
            flow,
            source_side,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Instance {
        n: usize,
        src: Vec<f64>,
        snk: Vec<f64>,
        arcs: Vec<(usize, usize, f64)>,
    }

    impl Instance {
        fn network(&self) -> FlowNetwork {
            let mut net = FlowNetwork::new(self.n);
            for v in 0..self.n {
                net.add_terminal(v, self.src[v], self.snk[v]);
            }
            for &(u, v, c) in &self.arcs {
                net.add_edge(u, v, c, 0.0);
            }
            net
        }

        fn cut_value(&self, side: &[bool]) -> f64 {
            let mut v = 0.0;
            for i in 0..self.n {
                if side[i] {
                    v += self.snk[i];
                } else {
                    v += self.src[i];
                }
            }
            for &(a, b, c) in &self.arcs {
                if side[a] && !side[b] {
                    v += c;
                }
            }
            v
        }

        fn exhaustive(&self) -> f64 {
            (0u32..1 << self.n)
                .map(|mask| {
                    let side: Vec<bool> = (0..self.n).map(|i| mask >> i & 1 == 1).collect();
                    self.cut_value(&side)
                })
                .fold(f64::INFINITY, f64::min)
        }
    }

    #[test]
    fn two_vertex_network() {
        // v0: s->v0 = 1, v0->t = 2; v1: s->v1 = 3, v1->t = 1; v0->v1 = 1.5
        let inst = Instance {
            n: 2,
            src: vec![1.0, 3.0],
            snk: vec![2.0, 1.0],
            arcs: vec![(0, 1, 1.5)],
        };
        // cuts: {} = 4, {0} = 2+3+1.5 = 6.5, {1} = 1+1 = 2, {0,1} = 3
        let cut = inst.network().min_cut();
        assert_eq!(cut.value, 2.0);
        assert_eq!(cut.source_side, vec![false, true]);
        assert!((cut.flow - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_capacities() {
        let mut net = FlowNetwork::new(3);
        net.add_terminal(0, 0.0, 0.0);
        net.add_edge(0, 1, 0.0, 0.0);
        assert_eq!(net.min_cut().value, 0.0);
    }

    #[test]
    fn random_graphs_match_exhaustive_bipartition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..200 {
            let n = 1 + trial % 12;
            let inst = Instance {
                n,
                src: (0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..3.0) } else { 0.0 }).collect(),
                snk: (0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..3.0) } else { 0.0 }).collect(),
                arcs: (0..n * 2)
                    .filter_map(|_| {
                        let a = rng.gen_range(0..n);
                        let b = rng.gen_range(0..n);
                        (a != b).then(|| (a, b, rng.gen_range(0.0..2.0)))
                    })
                    .collect(),
            };
            let cut = inst.network().min_cut();
            let best = inst.exhaustive();
            assert!((cut.value - best).abs() <= 1e-9 * best.max(1.0), "trial {trial}: {} vs {best}", cut.value);
            assert!((cut.flow - cut.value).abs() <= 1e-9 * best.max(1.0));
            assert!((inst.cut_value(&cut.source_side) - cut.value).abs() <= 1e-12 * best.max(1.0));
        }
    }
}
