//! Successive-shortest-path min-cost flow with Johnson potentials.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
    rev: usize,
}

/// Residual network; arcs are addressed by (node, slot).
#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    initial_cap: Vec<Vec<i64>>,
}

impl FlowNetwork {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            initial_cap: vec![Vec::new(); n],
        }
    }

    /// Adds `u → v` and returns its (node, slot) handle. Costs must be ≥ 0.
    pub(crate) fn add_arc(&mut self, u: usize, v: usize, cap: i64, cost: i64) -> (usize, usize) {
        debug_assert!(cost >= 0);
        let (fu, fv) = (self.adj[u].len(), self.adj[v].len() + usize::from(u == v));
        self.adj[u].push(Arc { to: v, cap, cost, rev: fv });
        self.initial_cap[u].push(cap);
        self.adj[v].push(Arc { to: u, cap: 0, cost: -cost, rev: fu });
        self.initial_cap[v].push(0);
        (u, fu)
    }

    /// Flow currently carried by the arc behind `handle`.
    pub(crate) fn flow(&self, handle: (usize, usize)) -> i64 {
        let (u, k) = handle;
        self.initial_cap[u][k] - self.adj[u][k].cap
    }

    /// Sends up to `demand` units from `s` to `t` at minimum cost.
    /// Returns the amount sent.
    pub(crate) fn min_cost_flow(&mut self, s: usize, t: usize, demand: i64) -> i64 {
        let n = self.adj.len();
        let mut potential = vec![0i64; n];
        let mut dist = vec![i64::MAX; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut sent = 0;
        while sent < demand {
            dist.fill(i64::MAX);
            prev.fill(None);
            dist[s] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (k, arc) in self.adj[u].iter().enumerate() {
                    if arc.cap <= 0 {
                        continue;
                    }
                    let nd = d + arc.cost + potential[u] - potential[arc.to];
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        prev[arc.to] = Some((u, k));
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[t] == i64::MAX {
                break;
            }
            for v in 0..n {
                if dist[v] != i64::MAX {
                    potential[v] += dist[v];
                }
            }
            let mut push = demand - sent;
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                push = push.min(self.adj[u][k].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                self.adj[u][k].cap -= push;
                let rev = self.adj[u][k].rev;
                self.adj[v][rev].cap += push;
                v = u;
            }
            sent += push;
        }
        sent
    }
}
