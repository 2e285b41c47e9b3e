//! Diagonal encoding of the distance table over the `N x N` index grid.

use serde::{Deserialize, Serialize};

use crate::blockenc::{be_power, be_wrap, Approx, BlockEncoding, Operator};
use crate::graph::GeodesicMatrix;
use crate::scalar::Scalar;

use super::{PipelineError, PowerMode};

/// Finite pairwise distances; entry `(i, j)` sits at grid index `i * n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n: usize,
    d: Vec<f64>,
}

impl DistanceTable {
    pub fn from_geodesic<S: Scalar>(dg: &GeodesicMatrix<S>) -> Result<Self, PipelineError> {
        let n = dg.n();
        let mut d = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = dg.get(i, j).ok_or(PipelineError::InfiniteDistance { i, j })?;
                d.push(v.to_f64());
            }
        }
        Self::from_flat(n, d)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PipelineError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(PipelineError::SizeMismatch { expected: n, got: bad.len() });
        }
        Self::from_flat(n, rows.concat())
    }

    fn from_flat(n: usize, d: Vec<f64>) -> Result<Self, PipelineError> {
        if let Some(k) = d.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(PipelineError::InfiniteDistance { i: k / n, j: k % n });
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn max(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_nonzero(&self) -> Option<f64> {
        self.d.iter().cloned().filter(|&v| v > 0.0).reduce(f64::min)
    }

    /// Every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, d: self.d.iter().map(|v| v * factor).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEncodingMeta {
    /// Grid side `N`; the encoding has dimension `N^2`.
    pub n: usize,
    /// Subnormalization of the fourth-power operator.
    pub alpha: f64,
    /// Subnormalization of the distance encoding after the fourth root.
    pub alpha_q: f64,
    /// Max over min nonzero fourth power.
    pub kappa: f64,
    /// Condition bound handed to the fourth-root stage.
    pub kappa_power: f64,
}

/// Wraps `diag(d^4) / alpha` and takes its fourth root, giving an encoding of
/// `diag(d) / alpha_q` with `alpha = ((1 + margin) max d)^4` and `alpha_q = 2 alpha^{1/4}`.
pub fn build_distance_encoding(
    table: &DistanceTable,
    margin: f64,
    mode: Approx,
) -> Result<(BlockEncoding, DistanceEncodingMeta), PipelineError> {
    let mode = match mode {
        Approx::Exact => PowerMode::Exact,
        Approx::Chebyshev { degree } => PowerMode::Chebyshev { degree: Some(degree), target: 0.0 },
    };
    let (_, enc, meta) = distance_stages(table, margin, mode)?;
    Ok((enc, meta))
}

/// Both stages: the fourth-power wrap and its fourth root.
pub(crate) fn distance_stages(
    table: &DistanceTable,
    margin: f64,
    mode: PowerMode,
) -> Result<(BlockEncoding, BlockEncoding, DistanceEncodingMeta), PipelineError> {
    let max = table.max();
    let min = table.min_nonzero().ok_or(PipelineError::DegenerateAllZero)?;
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(crate::blockenc::BlockError::InvalidParameter(format!("margin {margin}")).into());
    }
    let alpha = ((1.0 + margin) * max).powi(4);
    let fourth: Vec<f64> = table.values().iter().map(|v| v.powi(4)).collect();
    let wrapped = be_wrap(Operator::diagonal(fourth), alpha)?;
    let kappa = (max / min).powi(4);
    let kappa_power = (alpha / min.powi(4)).max(1.0);
    let enc = be_power(&wrapped, 0.25, kappa_power, mode.approx(kappa_power))?;
    let meta = DistanceEncodingMeta { n: table.n(), alpha, alpha_q: enc.subnorm(), kappa, kappa_power };
    Ok((wrapped, enc, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn constant_distances_encode_one_half() {
        let t = DistanceTable::from_rows(&[vec![3.0, 3.0], vec![3.0, 3.0]]).unwrap();
        let (enc, meta) = build_distance_encoding(&t, 0.0, Approx::Exact).unwrap();
        assert!(close(meta.alpha_q, 6.0));
        assert!(enc.encoded_diagonal().unwrap().iter().all(|&v| close(v, 0.5)));
        assert_eq!(meta.kappa, 1.0);
    }

    #[test]
    fn one_and_two() {
        let t = DistanceTable::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let (enc, meta) = build_distance_encoding(&t, 0.0, Approx::Exact).unwrap();
        let d = enc.encoded_diagonal().unwrap();
        assert!(close(d[0], 0.25) && close(d[1], 0.5));
        assert_eq!(meta.kappa, 16.0);
    }

    #[test]
    fn three_values_with_zero_diagonal() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]];
        let t = DistanceTable::from_rows(&rows).unwrap();
        let (enc, meta) = build_distance_encoding(&t, 0.0, Approx::Exact).unwrap();
        assert!(close(meta.alpha_q, 6.0));
        let d = enc.encoded_diagonal().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(d[t.index(i, j)] * meta.alpha_q, rows[i][j]));
            }
        }
    }

    #[test]
    fn errors() {
        let z = DistanceTable::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(build_distance_encoding(&z, 0.05, Approx::Exact).unwrap_err(), PipelineError::DegenerateAllZero);
        assert!(matches!(
            DistanceTable::from_rows(&[vec![0.0, f64::INFINITY], vec![1.0, 0.0]]),
            Err(PipelineError::InfiniteDistance { i: 0, j: 1 })
        ));
    }
}
