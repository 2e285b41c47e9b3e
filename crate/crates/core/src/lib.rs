//! Ollivier-Ricci curvature of graph edges.
//!
//! Classical routes solve the neighborhood transport problem exactly
//! ([`transport`]); simulated routes reproduce the same numbers through
//! block-encoded linear algebra ([`blockenc`], [`qorc`]). [`batch`] runs either
//! over the edges of a graph and [`report`] serializes the results.

pub mod batch;
pub mod blockenc;
pub mod fixtures;
pub mod graph;
pub mod qorc;
pub mod report;
pub mod scalar;
pub mod transport;

use thiserror::Error;

pub use batch::{run, run_compare, EdgeSelection, InputFormat, Instance, NumericMode, RunError, RunOptions, RunOutput};
pub use fixtures::Fixture;
pub use graph::{all_pairs_geodesic, neighborhood, Graph, GraphError, LocalNeighborhood};
pub use qorc::{PipelineError, QsimConfig};
pub use report::{CompareSummary, CurvatureReport, EdgeRecord, RunMeta};
pub use scalar::{Rational, Scalar, Value};
pub use transport::{curvature, CurvatureResult, Method, TransportError};

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Block(#[from] blockenc::BlockError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Fixture(#[from] fixtures::UnknownFixture),
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
