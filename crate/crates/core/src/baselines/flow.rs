//! Successive-shortest-path min-cost flow with Johnson potentials, used for
//! the exact capacity-constrained assignment step.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Matrix;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

/// Residual graph with integer capacities and real costs.
///
/// Costs must be non-negative; the graph is built once and solved once.
#[derive(Debug, Clone)]
pub struct MinCostFlow {
    graph: Vec<Vec<Edge>>,
}

#[derive(PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        MinCostFlow { graph: vec![Vec::new(); nodes] }
    }

    /// Adds `from -> to`; returns the edge position in `from`'s list.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        debug_assert!(cost >= 0.0);
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: bwd, cap, cost });
        self.graph[to].push(Edge { to: from, rev: fwd, cap: 0, cost: -cost });
        fwd
    }

    /// Remaining capacity of edge `idx` out of `from`.
    pub fn residual(&self, from: usize, idx: usize) -> i64 {
        self.graph[from][idx].cap
    }

    /// Push up to `limit` units from `s` to `t`; returns `(flow, cost)`.
    pub fn solve(&mut self, s: usize, t: usize, limit: i64) -> (i64, f64) {
        let n = self.graph.len();
        let mut potential = vec![0.0; n];
        let mut flow = 0;
        let mut cost = 0.0;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        while flow < limit {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            prev.iter_mut().for_each(|p| *p = None);
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(State { dist: 0.0, node: s });
            while let Some(State { dist: d, node: v }) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                for (ei, e) in self.graph[v].iter().enumerate() {
                    if e.cap <= 0 {
                        continue;
                    }
                    // rounding can leave reduced costs a hair below zero
                    let reduced = (e.cost + potential[v] - potential[e.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        prev[e.to] = Some((v, ei));
                        heap.push(State { dist: nd, node: e.to });
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut push = limit - flow;
            let mut v = t;
            while let Some((u, ei)) = prev[v] {
                push = push.min(self.graph[u][ei].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, ei)) = prev[v] {
                let rev = self.graph[u][ei].rev;
                self.graph[u][ei].cap -= push;
                self.graph[v][rev].cap += push;
                cost += push as f64 * self.graph[u][ei].cost;
                v = u;
            }
            flow += push;
        }
        (flow, cost)
    }
}

/// Minimum-cost assignment of N rows to K columns with every column
/// receiving between `n_min` and `n_max` rows.
///
/// Network: source -> row (1), row -> column (1, cost), column -> sink
/// (`n_min`), column -> overflow (`n_max - n_min`), overflow -> sink
/// (`N - K n_min`). Total sink capacity is exactly N, so a flow of value N
/// saturates every lower-bound edge.
pub fn assign_with_capacities(cost: &Matrix, n_min: usize, n_max: usize) -> Result<(Vec<usize>, f64)> {
    let n = cost.rows();
    let k = cost.cols();
    if k == 0 || n_min > n_max || k * n_min > n || k * n_max < n {
        return Err(Error::config(format!(
            "infeasible capacity bounds {n_min}..{n_max} for N = {n}, K = {k}"
        )));
    }
    let source = n + k;
    let overflow = n + k + 1;
    let sink = n + k + 2;
    let mut g = MinCostFlow::new(n + k + 3);
    let mut row_edges = Vec::with_capacity(n);
    for i in 0..n {
        g.add_edge(source, i, 1, 0.0);
        // row edges are contiguous in the row's adjacency list
        let base = g.add_edge(i, n, 1, cost.get(i, 0));
        for l in 1..k {
            g.add_edge(i, n + l, 1, cost.get(i, l));
        }
        row_edges.push(base);
    }
    for l in 0..k {
        if n_min > 0 {
            g.add_edge(n + l, sink, n_min as i64, 0.0);
        }
        if n_max > n_min {
            g.add_edge(n + l, overflow, (n_max - n_min) as i64, 0.0);
        }
    }
    let spill = n - k * n_min;
    if spill > 0 {
        g.add_edge(overflow, sink, spill as i64, 0.0);
    }
    let (flow, _) = g.solve(source, sink, n as i64);
    if flow < n as i64 {
        return Err(Error::config("capacity-constrained assignment is infeasible"));
    }
    let mut labels = Vec::with_capacity(n);
    let mut total = 0.0;
    for (i, &base) in row_edges.iter().enumerate() {
        let l = (0..k)
            .find(|&l| g.residual(i, base + l) == 0)
            .expect("every row carries one unit of flow");
        total += cost.get(i, l);
        labels.push(l);
    }
    Ok((labels, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_network() {
        // two routes from 0 to 3: 0-1-3 costs 2, 0-2-3 costs 5
        let mut g = MinCostFlow::new(4);
        g.add_edge(0, 1, 1, 1.0);
        g.add_edge(1, 3, 1, 1.0);
        g.add_edge(0, 2, 2, 2.0);
        g.add_edge(2, 3, 2, 3.0);
        assert_eq!(g.solve(0, 3, 2), (2, 7.0));
    }

    #[test]
    fn balanced_assignment_forces_split() {
        // all four rows prefer column 0; exactly two may go there
        let cost = Matrix::from_vec(4, 2, vec![0.0, 10.0, 1.0, 5.0, 2.0, 3.0, 0.5, 9.0]);
        let (labels, total) = assign_with_capacities(&cost, 2, 2).unwrap();
        assert_eq!(labels, vec![0, 1, 1, 0]);
        assert_eq!(total, 0.0 + 5.0 + 3.0 + 0.5);
    }

    #[test]
    fn infeasible_rejected() {
        let cost = Matrix::zeros(3, 2);
        assert!(assign_with_capacities(&cost, 2, 3).is_err());
        assert!(assign_with_capacities(&cost, 0, 1).is_err());
    }
}
