//! Tree route: W1 from three overlaps with the distance encoding.
//!
//! The state `(1/sqrt(p)) sum_i |x>|x_i>` has expectation
//! `sum_i d(x, x_i) / (p alpha_q)` under the encoding. The reported overlap
//! carries the `p/(p+1)` factor of the `1/sqrt(p+1)` normalization, and
//! recovery multiplies by `alpha_q (p+1)`.

use serde::{Deserialize, Serialize};

use crate::blockenc::{apply_dilated, overlap, shot_std_error, BlockEncoding, StateVector};
use crate::graph::{
    neighborhood_with, verify_tree, GeodesicMatrix, Graph, GraphError, LocalNeighborhood, NeighborhoodOptions,
};
use crate::scalar::Scalar;
use crate::transport::{CurvatureResult, Method};

use super::distance::{distance_stages, DistanceEncodingMeta, DistanceTable};
use super::{derive_seed, AuditRecord, PipelineError, QsimConfig};

/// One measured neighbor sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeOverlap {
    /// `sum_i d(center, nbr_i) / (alpha_q (p + 1))`.
    pub value: f64,
    /// Expectation in the unit-norm state, `sum_i d / (p alpha_q)`.
    pub unit: f64,
    /// Standard error of `unit`; zero for exact overlaps.
    pub std_error: f64,
    pub p: usize,
}

impl TreeOverlap {
    /// `value * alpha_q * (p + 1)`: the neighbor distance sum.
    pub fn recovered_sum(&self, alpha_q: f64) -> f64 {
        self.value * alpha_q * (self.p as f64 + 1.0)
    }
}

fn measure(be: &BlockEncoding, support: &[usize], shots: Option<u64>, seed: u64) -> Result<(f64, f64), PipelineError> {
    let phi = StateVector::uniform(be.dim(), support)?;
    let out = apply_dilated(be, &phi)?;
    let r = overlap(&phi.with_zero_ancilla(), &out, shots, seed)?;
    let se = shots.map_or(0.0, |n| shot_std_error(r.clamp(-1.0, 1.0), n));
    Ok((r, se))
}

/// Overlap for the neighbor sum around `center` on the `N x N` grid of `meta`.
pub fn tree_overlap_sum(
    be: &BlockEncoding,
    meta: &DistanceEncodingMeta,
    center: usize,
    nbrs: &[usize],
    shots: Option<u64>,
    seed: u64,
) -> Result<TreeOverlap, PipelineError> {
    let n = meta.n;
    if be.dim() != n * n {
        return Err(PipelineError::SizeMismatch { expected: n * n, got: be.dim() });
    }
    if nbrs.is_empty() {
        return Err(GraphError::EmptyNeighborhood { x: center, y: center, p: 0, q: 0 }.into());
    }
    if let Some(&bad) = std::iter::once(&center).chain(nbrs).find(|&&v| v >= n) {
        return Err(PipelineError::IndexOutOfRange { index: bad, limit: n });
    }
    let support: Vec<usize> = nbrs.iter().map(|&v| center * n + v).collect();
    let (unit, std_error) = measure(be, &support, shots, seed)?;
    let p = nbrs.len();
    Ok(TreeOverlap { value: unit * p as f64 / (p as f64 + 1.0), unit, std_error, p })
}

/// Result of the tree route on one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeOutcome {
    pub result: CurvatureResult<f64>,
    pub x_sum: TreeOverlap,
    pub y_sum: TreeOverlap,
    /// Overlap on the basis state `|x>|y>`.
    pub dxy_overlap: f64,
    /// Propagated standard error of W1 in shot mode.
    pub std_error: Option<f64>,
}

/// Distance encoding built once per graph and reused across edges.
#[derive(Debug, Clone)]
pub struct TreeSimulator {
    encoding: BlockEncoding,
    meta: DistanceEncodingMeta,
    audit: Vec<AuditRecord>,
    config: QsimConfig,
}

impl TreeSimulator {
    pub fn new(table: &DistanceTable, config: &QsimConfig) -> Result<Self, PipelineError> {
        let (wrapped, encoding, meta) = distance_stages(table, config.margin, config.power_mode)?;
        let audit = vec![
            AuditRecord::of("distance_fourth_power", &wrapped, meta.alpha),
            AuditRecord::of("distance", &encoding, meta.alpha_q),
        ];
        Ok(Self { encoding, meta, audit, config: config.clone() })
    }

    pub fn from_graph<S: Scalar>(
        g: &Graph<S>,
        dg: &GeodesicMatrix<S>,
        config: &QsimConfig,
    ) -> Result<Self, PipelineError> {
        if !verify_tree(g) {
            return Err(PipelineError::NotATree);
        }
        Self::new(&DistanceTable::from_geodesic(dg)?, config)
    }

    pub fn meta(&self) -> &DistanceEncodingMeta {
        &self.meta
    }

    pub fn encoding(&self) -> &BlockEncoding {
        &self.encoding
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    fn recovery_scale(&self) -> f64 {
        self.meta.alpha_q * self.config.alpha_q_corruption.unwrap_or(1.0)
    }

    /// W1 and curvature for the neighborhood `nb`, whose labels index the distance table.
    pub fn edge<S: Scalar>(&self, nb: &LocalNeighborhood<S>) -> Result<TreeOutcome, PipelineError> {
        let (x, y) = (nb.x, nb.y);
        if nb.xs.is_empty() || nb.ys.is_empty() {
            return Err(GraphError::EmptyNeighborhood { x, y, p: nb.p(), q: nb.q() }.into());
        }
        let shots = self.config.shots;
        let seed = |k: u64| derive_seed(self.config.seed, &[x as u64, y as u64, k]);
        let x_sum = tree_overlap_sum(&self.encoding, &self.meta, x, &nb.xs, shots, seed(0))?;
        let y_sum = tree_overlap_sum(&self.encoding, &self.meta, y, &nb.ys, shots, seed(1))?;
        let n = self.meta.n;
        if x >= n || y >= n {
            return Err(PipelineError::IndexOutOfRange { index: x.max(y), limit: n });
        }
        let (dxy_overlap, dxy_se) = measure(&self.encoding, &[x * n + y], shots, seed(2))?;

        let scale = self.recovery_scale();
        let (p, q) = (nb.p() as f64, nb.q() as f64);
        let dxy = dxy_overlap * scale;
        let w1 = x_sum.recovered_sum(scale) / p + dxy + y_sum.recovered_sum(scale) / q;
        let std_error =
            shots.map(|_| scale * (x_sum.std_error.powi(2) + dxy_se.powi(2) + y_sum.std_error.powi(2)).sqrt());
        Ok(TreeOutcome {
            result: CurvatureResult::new(x, y, w1, dxy, Method::QsimTree),
            x_sum,
            y_sum,
            dxy_overlap,
            std_error,
        })
    }
}

/// One-shot tree route for the edge `(x, y)`.
pub fn w1_tree_qsim<S: Scalar>(
    g: &Graph<S>,
    dg: &GeodesicMatrix<S>,
    x: usize,
    y: usize,
    config: &QsimConfig,
) -> Result<TreeOutcome, PipelineError> {
    let sim = TreeSimulator::from_graph(g, dg, config)?;
    let opts = NeighborhoodOptions { include_endpoints: config.include_endpoints };
    let nb = neighborhood_with(g, dg, x, y, opts)?;
    sim.edge(&nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::Approx;
    use crate::graph::{all_pairs_geodesic, parse_edge_list};
    use crate::qorc::build_distance_encoding;

    #[test]
    fn single_neighbor_overlap() {
        let t = DistanceTable::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let (be, meta) = build_distance_encoding(&t, 0.0, Approx::Exact).unwrap();
        let o = tree_overlap_sum(&be, &meta, 0, &[1], None, 0).unwrap();
        assert!((o.value - 3.0 / (2.0 * meta.alpha_q)).abs() < 1e-15);
    }

    #[test]
    fn two_neighbors_overlap() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]];
        let t = DistanceTable::from_rows(&rows).unwrap();
        let (be, meta) = build_distance_encoding(&t, 0.05, Approx::Exact).unwrap();
        let o = tree_overlap_sum(&be, &meta, 0, &[1, 2], None, 0).unwrap();
        assert!((o.value - 1.0 / meta.alpha_q).abs() < 1e-15);
        assert!((o.recovered_sum(meta.alpha_q) - 3.0).abs() < 1e-13);
        assert!(matches!(tree_overlap_sum(&be, &meta, 5, &[1], None, 0), Err(PipelineError::IndexOutOfRange { .. })));
    }

    #[test]
    fn path_of_four() {
        let g = parse_edge_list("0 1\n1 2\n2 3\n").unwrap().to_scalar::<f64>();
        let dg = all_pairs_geodesic(&g);
        let out = w1_tree_qsim(&g, &dg, 1, 2, &QsimConfig::default()).unwrap();
        assert!((out.result.w1 - 3.0).abs() < 1e-12);
        assert!((out.result.curvature + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_cycles() {
        let g = parse_edge_list("0 1\n1 2\n2 0\n").unwrap();
        let dg = all_pairs_geodesic(&g);
        assert_eq!(w1_tree_qsim(&g, &dg, 0, 1, &QsimConfig::default()).unwrap_err(), PipelineError::NotATree);
    }
}
