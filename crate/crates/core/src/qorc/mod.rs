//! Classical simulation of the two block-encoding curvature algorithms.
//!
//! The tree route reads neighbor-distance sums off overlaps with a diagonal
//! distance encoding. The square route builds the tensor-sum operator whose
//! diagonal enumerates every column-wise sum of the local cost matrix, projects
//! it onto permutation indices, and extracts the smallest nonzero eigenvalue
//! by power iteration on the pseudoinverse.
//!
//! Every recovery multiplier uses the subnormalization recorded by the
//! encodings, so recovered values match the classical solvers to rounding.

mod distance;
mod eigen;
mod pq;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blockenc::{Approx, BlockEncoding, BlockError};
use crate::graph::GraphError;

pub use distance::{build_distance_encoding, DistanceEncodingMeta, DistanceTable};
pub use eigen::{min_eigen_power, EigenEstimate};
pub use pq::{
    build_dp, build_pi, decode_perm_index, extract_di, localize_dg, perm_index, permutation_support, w1_pq_qsim,
    w1_pq_qsim_cost, PiRoute, PqOutcome, PqSimulator,
};
pub(crate) use pq::{checked_dim, cost_table};
pub use tree::{tree_overlap_sum, w1_tree_qsim, TreeOutcome, TreeOverlap, TreeSimulator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("InfiniteDistance: d({i},{j}) is not finite")]
    InfiniteDistance { i: usize, j: usize },
    #[error("DegenerateAllZero: every distance is zero")]
    DegenerateAllZero,
    #[error("IndexOutOfRange: index {index} not below {limit}")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("SizeMismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("DimensionCap: dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("DigitOutOfRange: digit {digit} not in 1..={p}")]
    DigitOutOfRange { digit: usize, p: usize },
    #[error("NotSquare: the square route needs p = q, got p={p} q={q}")]
    NotSquare { p: usize, q: usize },
    #[error("NoConvergence: power iteration stopped after {} iterations (best value {})", best.iterations, best.value)]
    NoConvergence { best: Box<EigenEstimate> },
    #[error("ZeroOverlap: start vector is orthogonal to the target eigenspace")]
    ZeroOverlap,
    #[error("NotATree: the tree route needs an acyclic connected graph")]
    NotATree,
    #[error("NotDiagonal: the eigensolver needs a diagonal encoding")]
    NotDiagonal,
    #[error("Encoding: {0}")]
    Block(#[from] BlockError),
    #[error("Graph: {0}")]
    Graph(#[from] GraphError),
}

/// Options shared by both simulated routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsimConfig {
    /// Headroom above the largest distance when choosing the distance subnormalization.
    pub margin: f64,
    /// Relative stopping tolerance of the power iteration.
    pub eps: f64,
    pub seed: u64,
    /// Shot count for tree-route overlaps; exact overlaps when absent.
    pub shots: Option<u64>,
    pub max_iter: usize,
    /// Upper bound on `p^p` for the square route.
    pub cap: usize,
    /// Realization of the fourth-root stage.
    #[serde(skip)]
    pub power_mode: PowerMode,
    pub include_endpoints: bool,
    /// Debug: multiplies the recovery subnormalization, corrupting results.
    pub alpha_q_corruption: Option<f64>,
}

impl Default for QsimConfig {
    fn default() -> Self {
        Self {
            margin: 0.05,
            eps: 1e-10,
            seed: 0,
            shots: None,
            max_iter: 100_000,
            cap: 1_000_000,
            power_mode: PowerMode::Exact,
            include_endpoints: false,
            alpha_q_corruption: None,
        }
    }
}

/// Realization of the fractional power; the Chebyshev degree defaults to the
/// standard rule for the encoding's condition number and `target`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum PowerMode {
    #[default]
    Exact,
    Chebyshev {
        degree: Option<usize>,
        target: f64,
    },
}

impl PowerMode {
    pub(crate) fn approx(self, kappa: f64) -> Approx {
        match self {
            PowerMode::Exact => Approx::Exact,
            PowerMode::Chebyshev { degree: Some(d), .. } => Approx::Chebyshev { degree: d },
            PowerMode::Chebyshev { degree: None, target } => Approx::chebyshev_default(kappa, target),
        }
    }
}

/// One stage of the pipeline: `encoded entry * scale` is the intended quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub stage: String,
    pub dim: usize,
    pub subnorm: f64,
    pub err: f64,
    pub min_entry: f64,
    pub max_entry: f64,
    pub scale: f64,
}

impl AuditRecord {
    pub fn of(stage: &str, be: &BlockEncoding, scale: f64) -> Self {
        let (min_entry, max_entry) = be
            .encoded_diagonal()
            .map(|d| d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
            .unwrap_or((f64::NAN, f64::NAN));
        Self {
            stage: stage.to_string(),
            dim: be.dim(),
            subnorm: be.subnorm(),
            err: be.err(),
            min_entry,
            max_entry,
            scale,
        }
    }
}

/// Deterministic per-task seed.
pub(crate) fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = splitmix(z ^ splitmix(p));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
