//! Exact Wasserstein-1 solvers on local neighborhoods and curvature assembly.
//!
//! Three production routes are provided: the general transportation LP
//! (solved as an integral min-cost flow), the closed form for trees, and the
//! assignment route for square instances. Two brute-force oracles
//! (permutation enumeration and basic-feasible-solution enumeration) exist
//! to cross-check them.

mod assignment;
mod flow;
mod tree;
mod vertex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, LocalNeighborhood};
use crate::scalar::{curvature_of, Scalar};

pub use assignment::{w1_assignment, w1_bruteforce, BRUTE_FORCE_MAX};
pub use flow::{w1_lp, w1_lp_cost};
pub use tree::{w1_tree, w1_tree_checked};
pub use vertex::{lp_vertex_oracle, lp_vertex_oracle_cost, spanning_tree_count, VERTEX_ORACLE_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("cost matrix contains an infinite entry")]
    InfiniteCost,
    #[error("cost matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("instance too large for exhaustive enumeration (size {size}, limit {limit})")]
    TooLarge { size: usize, limit: usize },
    #[error("the graph is not a tree")]
    NotATree,
    #[error("method {method} is not applicable: {reason}")]
    MethodMismatch { method: Method, reason: String },
    #[error("empty cost matrix")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Curvature route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lp,
    Tree,
    Assignment,
    BruteForce,
    QsimTree,
    QsimPq,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Lp, Method::Tree, Method::Assignment, Method::BruteForce, Method::QsimTree, Method::QsimPq];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lp => "lp",
            Method::Tree => "tree",
            Method::Assignment => "assignment",
            Method::BruteForce => "brute_force",
            Method::QsimTree => "qsim_tree",
            Method::QsimPq => "qsim_pq",
        }
    }

    pub fn is_simulated(self) -> bool {
        matches!(self, Method::QsimTree | Method::QsimPq)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method '{s}'"))
    }
}

/// A feasible transport plan between uniform measures of sizes `p` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    pub p: usize,
    pub q: usize,
    pub gamma: Vec<Vec<S>>,
    pub cost_value: S,
}

impl<S: Scalar> TransportPlan<S> {
    /// Checks nonnegativity and both marginals, with tolerance `tol` in float mode.
    pub fn satisfies_marginals(&self, tol: f64) -> bool {
        let row_mass = S::from_ratio(1, self.p as i64);
        let col_mass = S::from_ratio(1, self.q as i64);
        let rows_ok = self.gamma.iter().all(|row| {
            let s = row.iter().fold(S::zero(), |a, v| a + v.clone());
            s.near(&row_mass, tol)
        });
        let cols_ok = (0..self.q).all(|j| {
            let s = self.gamma.iter().fold(S::zero(), |a, row| a + row[j].clone());
            s.near(&col_mass, tol)
        });
        let nonneg = self.gamma.iter().flatten().all(|v| *v >= S::zero());
        rows_ok && cols_ok && nonneg
    }

    pub fn cost_under(&self, cost: &[Vec<S>]) -> S {
        plan_cost(cost, &self.gamma)
    }
}

pub(crate) fn plan_cost<S: Scalar>(cost: &[Vec<S>], gamma: &[Vec<S>]) -> S {
    cost.iter().zip(gamma).flat_map(|(c, g)| c.iter().zip(g)).fold(S::zero(), |acc, (c, g)| acc + c.clone() * g.clone())
}

/// Optimal permutation for a square instance. `pi[i]` is the row matched to column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution<S> {
    pub p: usize,
    pub pi: Vec<usize>,
    /// `(1/p) * sum_i cost[pi[i]][i]`.
    pub cost_value: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureResult<S> {
    pub x: usize,
    pub y: usize,
    pub w1: S,
    pub dxy: S,
    pub curvature: S,
    pub method: Method,
}

impl<S: Scalar> CurvatureResult<S> {
    pub fn new(x: usize, y: usize, w1: S, dxy: S, method: Method) -> Self {
        let curvature = curvature_of(&w1, &dxy);
        Self { x, y, w1, dxy, curvature, method }
    }
}

pub(crate) fn validate_cost<S: Scalar>(cost: &[Vec<S>]) -> Result<(usize, usize), TransportError> {
    let p = cost.len();
    let q = cost.first().map_or(0, Vec::len);
    if p == 0 || q == 0 {
        return Err(TransportError::Empty);
    }
    if cost.iter().any(|row| row.len() != q) {
        return Err(GraphError::InvalidCost("ragged cost matrix".into()).into());
    }
    if !S::EXACT && cost.iter().flatten().any(|c| !c.to_f64().is_finite()) {
        return Err(TransportError::InfiniteCost);
    }
    Ok((p, q))
}

/// W1 and curvature of an edge by one of the classical routes.
pub fn curvature<S: Scalar>(nb: &LocalNeighborhood<S>, method: Method) -> Result<CurvatureResult<S>, TransportError> {
    let square = || {
        if nb.p() != nb.q() {
            return Err(TransportError::MethodMismatch {
                method,
                reason: format!("requires p = q, got p={} q={}", nb.p(), nb.q()),
            });
        }
        Ok(())
    };
    let w1 = match method {
        Method::Lp => w1_lp(nb)?.cost_value,
        Method::Tree => w1_tree_checked(nb)?,
        Method::Assignment => {
            square()?;
            w1_assignment(&nb.cost)?.cost_value
        }
        Method::BruteForce => {
            square()?;
            w1_bruteforce(&nb.cost)?.cost_value
        }
        Method::QsimTree | Method::QsimPq => {
            return Err(TransportError::MethodMismatch {
                method,
                reason: "simulated routes live in the qorc module".into(),
            })
        }
    };
    Ok(CurvatureResult::new(nb.x, nb.y, w1, nb.dxy.clone(), method))
}
