//! Vertex enumeration oracle for the transportation polytope.
//!
//! Basic solutions correspond to spanning trees of the complete bipartite
//! graph on sources and sinks. For each tree the flow is forced; peeling
//! leaves recovers it, and the tree is a vertex when every flow is nonnegative.

use crate::graph::LocalNeighborhood;
use crate::scalar::Scalar;

use super::{validate_cost, TransportError};

/// Largest `p + q` accepted by the oracle.
pub const VERTEX_ORACLE_MAX: usize = 9;

pub fn lp_vertex_oracle<S: Scalar>(nb: &LocalNeighborhood<S>) -> Result<S, TransportError> {
    lp_vertex_oracle_cost(&nb.cost)
}

pub fn lp_vertex_oracle_cost<S: Scalar>(cost: &[Vec<S>]) -> Result<S, TransportError> {
    let (p, q) = validate_cost(cost)?;
    if p + q > VERTEX_ORACLE_MAX {
        return Err(TransportError::TooLarge { size: p + q, limit: VERTEX_ORACLE_MAX });
    }
    let scale = S::from_i64((p * q) as i64);
    let mut best: Option<S> = None;
    for_each_spanning_tree(p, q, |tree| {
        if let Some(flows) = tree_flows(p, q, tree) {
            let total =
                tree.iter().zip(&flows).fold(S::zero(), |acc, (&(i, j), &f)| acc + cost[i][j].clone() * S::from_i64(f));
            let value = total / scale.clone();
            if best.as_ref().is_none_or(|b| value < *b) {
                best = Some(value);
            }
        }
    });
    Ok(best.expect("the north-west corner tree is always feasible"))
}

/// Number of spanning trees visited by the enumerator for `K_{p,q}`.
pub fn spanning_tree_count(p: usize, q: usize) -> usize {
    let mut count = 0;
    for_each_spanning_tree(p, q, |_| count += 1);
    count
}

/// Calls `visit` with the edge list `(source, sink)` of every spanning tree of `K_{p,q}`.
fn for_each_spanning_tree(p: usize, q: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    let edges: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..q).map(move |j| (i, j))).collect();
    let nodes = p + q;
    let labels: Vec<usize> = (0..nodes).collect();
    let mut chosen = Vec::with_capacity(nodes - 1);
    grow(&edges, 0, p, nodes - 1, &labels, &mut chosen, &mut visit);
}

fn grow(
    edges: &[(usize, usize)],
    next: usize,
    p: usize,
    need: usize,
    labels: &[usize],
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    if edges.len() - next < need - chosen.len() {
        return;
    }
    let (i, j) = edges[next];
    let (a, b) = (labels[i], labels[p + j]);
    if a != b {
        let merged: Vec<usize> = labels.iter().map(|&l| if l == b { a } else { l }).collect();
        chosen.push((i, j));
        grow(edges, next + 1, p, need, &merged, chosen, visit);
        chosen.pop();
    }
    grow(edges, next + 1, p, need, labels, chosen, visit);
}

/// Integral flows (scaled by `p*q`) forced on a spanning tree, or `None` if any is negative.
fn tree_flows(p: usize, q: usize, tree: &[(usize, usize)]) -> Option<Vec<i64>> {
    let mut balance: Vec<i64> = (0..p).map(|_| q as i64).chain((0..q).map(|_| p as i64)).collect();
    let mut degree = vec![0usize; p + q];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[p + j] += 1;
    }
    let mut flows = vec![0i64; tree.len()];
    let mut done = vec![false; tree.len()];
    for _ in 0..tree.len() {
        let (k, leaf_is_source) = tree.iter().enumerate().filter(|(k, _)| !done[*k]).find_map(|(k, &(i, j))| {
            if degree[i] == 1 {
                Some((k, true))
            } else if degree[p + j] == 1 {
                Some((k, false))
            } else {
                None
            }
        })?;
        let (i, j) = tree[k];
        let (leaf, other) = if leaf_is_source { (i, p + j) } else { (p + j, i) };
        let f = balance[leaf];
        flows[k] = f;
        balance[leaf] = 0;
        balance[other] -= f;
        degree[i] -= 1;
        degree[p + j] -= 1;
        done[k] = true;
    }
    flows.iter().all(|&f| f >= 0).then_some(flows)
}
