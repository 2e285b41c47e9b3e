//! Closed form on trees: every path from a neighbor of `x` to a neighbor of
//! `y` crosses the edge `(x, y)`, so any feasible plan is optimal.

use crate::graph::LocalNeighborhood;
use crate::scalar::{sum_of, Scalar};

use super::{Method, TransportError};

/// `(1/p) sum d(x_i, x) + d(x, y) + (1/q) sum d(y, y_j)`. The caller vouches that the graph is a tree.
pub fn w1_tree<S: Scalar>(nb: &LocalNeighborhood<S>) -> Result<S, TransportError> {
    let radii = nb.radii.as_ref().ok_or_else(|| TransportError::MethodMismatch {
        method: Method::Tree,
        reason: "neighbor radii are unavailable for a bare cost matrix".into(),
    })?;
    if radii.from_x.is_empty() || radii.from_y.is_empty() {
        return Err(TransportError::Empty);
    }
    let p = S::from_i64(radii.from_x.len() as i64);
    let q = S::from_i64(radii.from_y.len() as i64);
    Ok(sum_of(&radii.from_x) / p + nb.dxy.clone() + sum_of(&radii.from_y) / q)
}

/// [`w1_tree`] guarded by the tree flag recorded on the neighborhood.
pub fn w1_tree_checked<S: Scalar>(nb: &LocalNeighborhood<S>) -> Result<S, TransportError> {
    match nb.on_tree {
        Some(true) => w1_tree(nb),
        Some(false) => Err(TransportError::NotATree),
        None => Err(TransportError::MethodMismatch {
            method: Method::Tree,
            reason: "graph structure unknown for a bare cost matrix".into(),
        }),
    }
}
