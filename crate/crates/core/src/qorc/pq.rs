//! Square route (`p = q`): W1 as the smallest permutation sum of the local
//! cost matrix, read off the projected tensor-sum operator.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::blockenc::{
    be_density, be_lcu, be_product, be_tensor, be_wrap, conjugate, restrict, BlockEncoding, Operator, PermutationSpec,
    StateVector,
};
use crate::graph::{neighborhood_with, GeodesicMatrix, Graph, LocalNeighborhood, NeighborhoodOptions};
use crate::scalar::Scalar;
use crate::transport::{CurvatureResult, Method};

use super::distance::{distance_stages, DistanceEncodingMeta, DistanceTable};
use super::eigen::{min_eigen_power, EigenEstimate};
use super::{derive_seed, AuditRecord, PipelineError, QsimConfig};

/// Largest `p` for the purified projector route.
const PURIFIED_MAX: usize = 4;

pub(crate) fn checked_dim(p: usize, cap: usize) -> Result<usize, PipelineError> {
    match u32::try_from(p).ok().and_then(|e| p.checked_pow(e)) {
        Some(dim) if dim <= cap => Ok(dim),
        Some(dim) => Err(PipelineError::DimensionCap { dim, cap }),
        None => Err(PipelineError::DimensionCap { dim: usize::MAX, cap }),
    }
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

/// Moves the `p x p` block `d(X[i], Y[j])` of the distance encoding to the
/// front, then swaps the two registers: the result has `d(X[i], Y[j])` at
/// position `j * p + i`.
pub fn localize_dg(
    be: &BlockEncoding,
    meta: &DistanceEncodingMeta,
    xs: &[usize],
    ys: &[usize],
) -> Result<BlockEncoding, PipelineError> {
    let p = xs.len();
    if ys.len() != p {
        return Err(PipelineError::SizeMismatch { expected: p, got: ys.len() });
    }
    let n = meta.n;
    if be.dim() != n * n {
        return Err(PipelineError::SizeMismatch { expected: n * n, got: be.dim() });
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|&&v| v >= n) {
        return Err(PipelineError::IndexOutOfRange { index: bad, limit: n });
    }
    let mut map = vec![usize::MAX; n * n];
    for (i, &a) in xs.iter().enumerate() {
        for (j, &b) in ys.iter().enumerate() {
            map[a * n + b] = i * p + j;
        }
    }
    for (slot, next) in map.iter_mut().filter(|t| **t == usize::MAX).zip(p * p..) {
        *slot = next;
    }
    let relabel = PermutationSpec::new(map).map_err(|_| PipelineError::SizeMismatch { expected: p, got: p })?;
    let front = restrict(&conjugate(&relabel, be)?, p * p)?;
    let swap: Vec<usize> = (0..p * p).map(|k| (k % p) * p + k / p).collect();
    Ok(conjugate(&PermutationSpec::new(swap)?, &front)?)
}

/// `diag(d(X[0], Y[i-1]), ..., d(X[p-1], Y[i-1])) / alpha_q` for the one-based column `i`.
pub fn extract_di(local: &BlockEncoding, i: usize) -> Result<BlockEncoding, PipelineError> {
    let p = (local.dim() as f64).sqrt().round() as usize;
    if p * p != local.dim() {
        return Err(PipelineError::SizeMismatch { expected: p * p, got: local.dim() });
    }
    if i == 0 || i > p {
        return Err(PipelineError::IndexOutOfRange { index: i, limit: p + 1 });
    }
    let block = i - 1;
    let mut map: Vec<usize> = (0..p * p).collect();
    if block != 0 {
        for r in 0..p {
            map.swap(r, block * p + r);
        }
    }
    Ok(restrict(&conjugate(&PermutationSpec::new(map)?, local)?, p)?)
}

/// Uniform combination of `I^{(k)} (x) D_k (x) I^{(p-k-1)}`: the entry at digit
/// tuple `(i_1, ..., i_p)` encodes `(d_{i_1 1} + ... + d_{i_p p}) / (p alpha_q)`.
pub fn build_dp(ds: &[BlockEncoding], cap: usize) -> Result<BlockEncoding, PipelineError> {
    let p = ds.len();
    if p == 0 {
        return Err(PipelineError::SizeMismatch { expected: 1, got: 0 });
    }
    if let Some(bad) = ds.iter().find(|d| d.dim() != p) {
        return Err(PipelineError::SizeMismatch { expected: p, got: bad.dim() });
    }
    checked_dim(p, cap)?;
    let identity = |k: u32| be_wrap(Operator::identity(p.pow(k)), 1.0);
    let terms = ds
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let left = be_tensor(&identity(k as u32)?, d)?;
            be_tensor(&left, &identity((p - k - 1) as u32)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(be_lcu(&terms, &vec![1; p])?)
}

/// Zero-based position `sum_j (i_j - 1) p^{p-j}` of the one-based digit tuple.
pub fn perm_index(digits: &[usize], p: usize) -> Result<usize, PipelineError> {
    if digits.len() != p {
        return Err(PipelineError::SizeMismatch { expected: p, got: digits.len() });
    }
    digits.iter().try_fold(0usize, |acc, &d| {
        if d == 0 || d > p {
            Err(PipelineError::DigitOutOfRange { digit: d, p })
        } else {
            Ok(acc * p + (d - 1))
        }
    })
}

/// Inverse of [`perm_index`].
pub fn decode_perm_index(mut k: usize, p: usize) -> Vec<usize> {
    let mut digits = vec![0; p];
    for slot in digits.iter_mut().rev() {
        *slot = k % p + 1;
        k /= p;
    }
    digits
}

/// Sorted positions whose digits are pairwise distinct.
pub fn permutation_support(p: usize) -> Vec<usize> {
    let mut s: Vec<usize> =
        (1..=p).permutations(p).map(|perm| perm_index(&perm, p).expect("digits in range")).collect();
    s.sort_unstable();
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiRoute {
    /// 0/1 diagonal wrapped with subnormalization `p!`.
    Direct,
    /// Reduced density matrix of the copy state over the permutation indices.
    Purified,
}

/// Encoding of `Pi / p!`, the normalized projector onto permutation indices.
pub fn build_pi(p: usize, route: PiRoute, cap: usize) -> Result<BlockEncoding, PipelineError> {
    let dim = checked_dim(p, cap)?;
    let support = permutation_support(p);
    match route {
        PiRoute::Direct => {
            let mut values = vec![0.0; dim];
            for &k in &support {
                values[k] = 1.0;
            }
            Ok(be_wrap(Operator::diagonal(values), factorial(p))?)
        }
        PiRoute::Purified => {
            if p > PURIFIED_MAX {
                return Err(PipelineError::DimensionCap {
                    dim: dim * dim,
                    cap: PURIFIED_MAX.pow(2 * PURIFIED_MAX as u32),
                });
            }
            let copies: Vec<usize> = support.iter().map(|&k| k * dim + k).collect();
            let phi = StateVector::uniform(dim * dim, &copies)?;
            Ok(be_density(&phi, dim, dim)?)
        }
    }
}

/// Result of the square route on one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PqOutcome {
    pub result: CurvatureResult<f64>,
    pub estimate: EigenEstimate,
    pub kappa_a: f64,
    pub audit: Vec<AuditRecord>,
}

/// Distance encoding built once per graph and reused across edges.
#[derive(Debug, Clone)]
pub struct PqSimulator {
    encoding: BlockEncoding,
    meta: DistanceEncodingMeta,
    audit: Vec<AuditRecord>,
    config: QsimConfig,
}

impl PqSimulator {
    pub fn new(table: &DistanceTable, config: &QsimConfig) -> Result<Self, PipelineError> {
        let (wrapped, encoding, meta) = distance_stages(table, config.margin, config.power_mode)?;
        let audit = vec![
            AuditRecord::of("distance_fourth_power", &wrapped, meta.alpha),
            AuditRecord::of("distance", &encoding, meta.alpha_q),
        ];
        Ok(Self { encoding, meta, audit, config: config.clone() })
    }

    pub fn from_graph<S: Scalar>(dg: &GeodesicMatrix<S>, config: &QsimConfig) -> Result<Self, PipelineError> {
        Self::new(&DistanceTable::from_geodesic(dg)?, config)
    }

    pub fn meta(&self) -> &DistanceEncodingMeta {
        &self.meta
    }

    pub fn encoding(&self) -> &BlockEncoding {
        &self.encoding
    }

    /// W1 and curvature for `nb`, whose labels index the distance table.
    pub fn edge<S: Scalar>(&self, nb: &LocalNeighborhood<S>) -> Result<PqOutcome, PipelineError> {
        let (p, q) = (nb.p(), nb.q());
        if p != q {
            return Err(PipelineError::NotSquare { p, q });
        }
        checked_dim(p, self.config.cap)?;
        let alpha_q = self.meta.alpha_q;
        let mut audit = self.audit.clone();

        let local = localize_dg(&self.encoding, &self.meta, &nb.xs, &nb.ys)?;
        audit.push(AuditRecord::of("localized", &local, alpha_q));
        let ds = (1..=p)
            .map(|i| {
                let d = extract_di(&local, i)?;
                audit.push(AuditRecord::of(&format!("column_{i}"), &d, alpha_q));
                Ok(d)
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let dp = build_dp(&ds, self.config.cap)?;
        audit.push(AuditRecord::of("tensor_sum", &dp, p as f64 * alpha_q));
        let pi = build_pi(p, PiRoute::Direct, self.config.cap)?;
        audit.push(AuditRecord::of("projector", &pi, factorial(p)));
        let composite = be_product(&pi, &dp)?;
        let composite_scale = factorial(p) * p as f64 * alpha_q;
        audit.push(AuditRecord::of("composite", &composite, composite_scale));

        let local_diag = local.encoded_diagonal().ok_or(PipelineError::NotDiagonal)?;
        let min_cost = local_diag.iter().cloned().filter(|&v| v > 0.0).reduce(f64::min);
        // Every nonzero permutation sum is at least the smallest nonzero cost.
        let kappa_a = min_cost.map_or(1.0, |m| (factorial(p) * p as f64 / m).max(1.0));
        let seed = derive_seed(self.config.seed, &[nb.x as u64, nb.y as u64]);
        let support = permutation_support(p);
        let estimate = min_eigen_power(&composite, &support, kappa_a, self.config.eps, seed, self.config.max_iter)?;

        let scale = alpha_q * self.config.alpha_q_corruption.unwrap_or(1.0);
        let w1 = estimate.value * factorial(p) * scale;
        let n = self.meta.n;
        let dxy = self.encoding.encoded_diagonal().ok_or(PipelineError::NotDiagonal)?[nb.x * n + nb.y] * scale;
        Ok(PqOutcome { result: CurvatureResult::new(nb.x, nb.y, w1, dxy, Method::QsimPq), estimate, kappa_a, audit })
    }
}

/// One-shot square route for the edge `(x, y)`.
pub fn w1_pq_qsim<S: Scalar>(
    g: &Graph<S>,
    dg: &GeodesicMatrix<S>,
    x: usize,
    y: usize,
    config: &QsimConfig,
) -> Result<PqOutcome, PipelineError> {
    let opts = NeighborhoodOptions { include_endpoints: config.include_endpoints };
    let nb = neighborhood_with(g, dg, x, y, opts)?;
    if nb.p() != nb.q() {
        return Err(PipelineError::NotSquare { p: nb.p(), q: nb.q() });
    }
    PqSimulator::from_graph(dg, config)?.edge(&nb)
}

/// Square route on an explicit cost matrix. The distance table has labels
/// `x = 0`, `y = 1`, rows `2..2+p`, columns `2+p..2+2p`; entries outside the
/// cost block and the edge are filled with the largest cost.
pub fn w1_pq_qsim_cost(cost: &[Vec<f64>], dxy: f64, config: &QsimConfig) -> Result<PqOutcome, PipelineError> {
    let nb = LocalNeighborhood::from_cost(cost.to_vec(), dxy)?;
    if nb.p() != nb.q() {
        return Err(PipelineError::NotSquare { p: nb.p(), q: nb.q() });
    }
    let table = cost_table(&nb);
    PqSimulator::new(&DistanceTable::from_rows(&table)?, config)?.edge(&nb)
}

pub(crate) fn cost_table(nb: &LocalNeighborhood<f64>) -> Vec<Vec<f64>> {
    let n = 2 + nb.p() + nb.q();
    let fill = nb.cost.iter().flatten().cloned().fold(0.0, f64::max);
    let mut t = vec![vec![fill; n]; n];
    for (i, row) in t.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (i, &a) in nb.xs.iter().enumerate() {
        for (j, &b) in nb.ys.iter().enumerate() {
            t[a][b] = nb.cost[i][j];
            t[b][a] = nb.cost[i][j];
        }
    }
    t[nb.x][nb.y] = nb.dxy;
    t[nb.y][nb.x] = nb.dxy;
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::Approx;
    use crate::qorc::build_distance_encoding;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    fn two_by_two() -> (BlockEncoding, DistanceEncodingMeta, Vec<usize>, Vec<usize>) {
        let nb = LocalNeighborhood::from_cost(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 1.0).unwrap();
        let table = DistanceTable::from_rows(&cost_table(&nb)).unwrap();
        let (be, meta) = build_distance_encoding(&table, 0.05, Approx::Exact).unwrap();
        (be, meta, nb.xs, nb.ys)
    }

    fn scaled(be: &BlockEncoding, s: f64) -> Vec<f64> {
        be.encoded_diagonal().unwrap().iter().map(|v| v * s).collect()
    }

    #[test]
    fn localize_orders_by_column() {
        let (be, meta, xs, ys) = two_by_two();
        let local = localize_dg(&be, &meta, &xs, &ys).unwrap();
        let got = scaled(&local, meta.alpha_q);
        for (g, w) in got.iter().zip([1.0, 3.0, 2.0, 4.0]) {
            assert!(close(*g, w, 1e-14), "{got:?}");
        }
        assert!(matches!(localize_dg(&be, &meta, &xs, &ys[..1]), Err(PipelineError::SizeMismatch { .. })));
    }

    #[test]
    fn columns_and_tensor_sum() {
        let (be, meta, xs, ys) = two_by_two();
        let local = localize_dg(&be, &meta, &xs, &ys).unwrap();
        let d1 = extract_di(&local, 1).unwrap();
        let d2 = extract_di(&local, 2).unwrap();
        assert!(scaled(&d1, meta.alpha_q).iter().zip([1.0, 3.0]).all(|(g, w)| close(*g, w, 1e-14)));
        assert!(scaled(&d2, meta.alpha_q).iter().zip([2.0, 4.0]).all(|(g, w)| close(*g, w, 1e-14)));
        assert!(matches!(extract_di(&local, 3), Err(PipelineError::IndexOutOfRange { .. })));
        let dp = build_dp(&[d1, d2], 1_000_000).unwrap();
        let got = scaled(&dp, 2.0 * meta.alpha_q);
        assert!(got.iter().zip([3.0, 5.0, 5.0, 7.0]).all(|(g, w)| close(*g, w, 1e-14)), "{got:?}");
    }

    #[test]
    fn index_examples() {
        assert_eq!(perm_index(&[1, 1, 1], 3).unwrap(), 0);
        assert_eq!(perm_index(&[3, 3, 3], 3).unwrap(), 26);
        assert_eq!(perm_index(&[1, 2, 3], 3).unwrap(), 5);
        assert_eq!(perm_index(&[1, 4, 1], 3), Err(PipelineError::DigitOutOfRange { digit: 4, p: 3 }));
        for k in 0..27 {
            assert_eq!(perm_index(&decode_perm_index(k, 3), 3).unwrap(), k);
        }
    }

    #[test]
    fn projector_support() {
        assert_eq!(permutation_support(2), vec![1, 2]);
        assert_eq!(permutation_support(3).len(), 6);
        for p in 2..=3 {
            let direct = build_pi(p, PiRoute::Direct, 1000).unwrap().encoded_diagonal().unwrap();
            let purified = build_pi(p, PiRoute::Purified, 1000).unwrap().encoded_diagonal().unwrap();
            assert!(direct.iter().zip(&purified).all(|(a, b)| (a - b).abs() <= 1e-14));
        }
        assert!(matches!(build_pi(8, PiRoute::Direct, 1_000_000), Err(PipelineError::DimensionCap { .. })));
    }

    #[test]
    fn end_to_end_small() {
        let cfg = QsimConfig::default();
        let one = w1_pq_qsim_cost(&[vec![2.5]], 1.0, &cfg).unwrap();
        assert!(close(one.result.w1, 2.5, 1e-12));
        let two = w1_pq_qsim_cost(&[vec![1.0, 2.0], vec![3.0, 4.0]], 1.0, &cfg).unwrap();
        assert!(close(two.result.w1, 2.5, 1e-10), "{}", two.result.w1);
        let err = w1_pq_qsim_cost(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]], 1.0, &cfg).unwrap_err();
        assert_eq!(err, PipelineError::NotSquare { p: 2, q: 3 });
        assert!(err.to_string().contains("NotSquare"));
    }
}
