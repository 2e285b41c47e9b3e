//! Transportation LP as an integral min-cost flow.
//!
//! Supplies `1/p` and demands `1/q` are scaled by `p*q`, so every source ships
//! `q` units and every sink receives `p` units. Successive shortest augmenting
//! paths with node potentials then find an integral optimum, and dividing the
//! flow by `p*q` recovers the plan. Flows stay integral in both numeric modes.

use crate::graph::LocalNeighborhood;
use crate::scalar::Scalar;

use super::{validate_cost, TransportError, TransportPlan};

pub fn w1_lp<S: Scalar>(nb: &LocalNeighborhood<S>) -> Result<TransportPlan<S>, TransportError> {
    w1_lp_cost(&nb.cost)
}

pub fn w1_lp_cost<S: Scalar>(cost: &[Vec<S>]) -> Result<TransportPlan<S>, TransportError> {
    let (p, q) = validate_cost(cost)?;
    let flow = min_cost_transport(cost, p, q);
    let total = (p * q) as i64;
    let gamma: Vec<Vec<S>> = flow.iter().map(|row| row.iter().map(|&f| S::from_ratio(f, total)).collect()).collect();
    let cost_value = super::plan_cost(cost, &gamma);
    Ok(TransportPlan { p, q, gamma, cost_value })
}

/// Residual network over `source(0..p)`, `sink(p..p+q)`, `s = p+q`, `t = p+q+1`.
struct Network<S> {
    p: usize,
    q: usize,
    cost: Vec<Vec<S>>,
    /// Units shipped from source `i` to sink `j`.
    flow: Vec<Vec<i64>>,
    supply_left: Vec<i64>,
    demand_left: Vec<i64>,
    dual: Vec<S>,
}

impl<S: Scalar> Network<S> {
    fn node_count(&self) -> usize {
        self.p + self.q + 2
    }

    /// Residual arcs out of `u` as `(v, cost)`.
    fn arcs(&self, u: usize, out: &mut Vec<(usize, S)>) {
        out.clear();
        let (p, q) = (self.p, self.q);
        let (s, t) = (p + q, p + q + 1);
        if u == s {
            for i in 0..p {
                if self.supply_left[i] > 0 {
                    out.push((i, S::zero()));
                }
            }
        } else if u < p {
            for j in 0..q {
                out.push((p + j, self.cost[u][j].clone()));
            }
        } else if u < p + q {
            let j = u - p;
            for i in 0..p {
                if self.flow[i][j] > 0 {
                    out.push((i, -self.cost[i][j].clone()));
                }
            }
            if self.demand_left[j] > 0 {
                out.push((t, S::zero()));
            }
        }
    }

    /// Dense Dijkstra on reduced costs; returns the predecessor array when `t` is reachable.
    fn shortest_path(&mut self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let (s, t) = (self.p + self.q, self.p + self.q + 1);
        let mut dist: Vec<Option<S>> = vec![None; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut arcs = Vec::new();
        dist[s] = Some(S::zero());
        loop {
            let mut best: Option<usize> = None;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    match best {
                        Some(b) if dist[b].as_ref().is_some_and(|db| db <= dv) => {}
                        _ => best = Some(v),
                    }
                }
            }
            let u = best?;
            done[u] = true;
            if u == t {
                break;
            }
            let du = dist[u].clone().expect("finalized node has a distance");
            self.arcs(u, &mut arcs);
            for (v, c) in arcs.drain(..) {
                if done[v] {
                    continue;
                }
                let mut reduced = c - self.dual[v].clone() + self.dual[u].clone();
                if !S::EXACT && reduced < S::zero() {
                    reduced = S::zero();
                }
                let candidate = du.clone() + reduced;
                let better = dist[v].as_ref().is_none_or(|dv| candidate < *dv);
                if better {
                    dist[v] = Some(candidate);
                    prev[v] = u;
                }
            }
        }
        let dt = dist[t].clone().expect("sink reached");
        for v in 0..n {
            if done[v] {
                let dv = dist[v].clone().expect("finalized");
                self.dual[v] = self.dual[v].clone() - (dt.clone() - dv);
            }
        }
        Some(prev)
    }

    fn augment(&mut self, prev: &[usize]) -> i64 {
        let (p, q) = (self.p, self.q);
        let (s, t) = (p + q, p + q + 1);
        let mut path = vec![t];
        let mut v = t;
        while v != s {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        let mut bottleneck = i64::MAX;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let cap = if a == s {
                self.supply_left[b]
            } else if b == t {
                self.demand_left[a - p]
            } else if a < p {
                i64::MAX
            } else {
                self.flow[b][a - p]
            };
            bottleneck = bottleneck.min(cap);
        }
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == s {
                self.supply_left[b] -= bottleneck;
            } else if b == t {
                self.demand_left[a - p] -= bottleneck;
            } else if a < p {
                self.flow[a][b - p] += bottleneck;
            } else {
                self.flow[b][a - p] -= bottleneck;
            }
        }
        bottleneck
    }
}

fn min_cost_transport<S: Scalar>(cost: &[Vec<S>], p: usize, q: usize) -> Vec<Vec<i64>> {
    let mut net = Network {
        p,
        q,
        cost: cost.to_vec(),
        flow: vec![vec![0; q]; p],
        supply_left: vec![q as i64; p],
        demand_left: vec![p as i64; q],
        dual: vec![S::zero(); p + q + 2],
    };
    let mut remaining = (p * q) as i64;
    while remaining > 0 {
        let prev = net.shortest_path().expect("balanced uncapacitated transport always has an augmenting path");
        remaining -= net.augment(&prev);
    }
    net.flow
}
