//! Built-in sample inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LocalNeighborhood;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown fixture '{0}' (expected appendix_a, path4 or star)")]
pub struct UnknownFixture(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    /// A three-by-four cost matrix with unit edge length; W1 is 25/12.
    AppendixA,
    /// The path `0 - 1 - 2 - 3`.
    Path4,
    /// A center with three unit-weight leaves.
    Star,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [Fixture::AppendixA, Fixture::Path4, Fixture::Star];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::AppendixA => "appendix_a",
            Fixture::Path4 => "path4",
            Fixture::Star => "star",
        }
    }

    /// File contents: a cost-matrix JSON document or an edge list.
    pub fn contents(self) -> String {
        match self {
            Fixture::AppendixA => {
                let doc = serde_json::json!({ "cost": APPENDIX_A_COST, "dxy": 1 });
                format!("{}\n", serde_json::to_string_pretty(&doc).expect("static json"))
            }
            Fixture::Path4 => "0 1\n1 2\n2 3\n".to_string(),
            Fixture::Star => "0 1 1\n0 2 1\n0 3 1\n".to_string(),
        }
    }

    pub fn is_cost_matrix(self) -> bool {
        matches!(self, Fixture::AppendixA)
    }
}

impl std::str::FromStr for Fixture {
    type Err = UnknownFixture;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fixture::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| UnknownFixture(s.to_string()))
    }
}

impl std::fmt::Display for Fixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const APPENDIX_A_COST: [[i64; 4]; 3] = [[1, 3, 3, 2], [2, 3, 3, 3], [3, 2, 2, 3]];

/// The three-by-four worked example with `d(x, y) = 1`.
pub fn appendix_a<S: Scalar>() -> LocalNeighborhood<S> {
    let cost = APPENDIX_A_COST.iter().map(|row| row.iter().map(|&v| S::from_i64(v)).collect()).collect();
    LocalNeighborhood::from_cost(cost, S::one()).expect("valid fixture")
}
