//! Block-encoding algebra at the level of `(operator, subnormalization, error)`.
//!
//! An encoding of `A` with subnormalization `s` stands for a unitary whose
//! top-left block is `A / s`. Compositions track `s` and the error bound `err`
//! (measured in units of `op`) exactly as the corresponding circuit
//! constructions would, without ever building the circuits. [`be_dilate`]
//! produces the explicit unitary at small dimension for verification.

pub mod chebyshev;
mod dilate;
mod operator;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

pub use chebyshev::{default_degree, sup_error, Chebyshev};
pub use dilate::{apply_dilated, be_dilate, DILATE_LIMIT};
pub use operator::{Monomial, Operator, DENSE_LIMIT};

pub type Complex = nalgebra::Complex<f64>;

/// Relative slack on norm and spectrum checks.
const CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("subnormalization {subnorm} is below the operator norm {norm}")]
    SubnormTooSmall { norm: f64, subnorm: f64 },
    #[error("dimension mismatch ({left} vs {right})")]
    DimMismatch { left: usize, right: usize },
    #[error("scale factor must exceed 1, got {0}")]
    BadFactor(f64),
    #[error("encoded eigenvalue {value} outside [{lo}, {hi}]")]
    SpectrumOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("operation requires a diagonal operator")]
    NotDiagonal,
    #[error("state of dimension {dim} does not factor as {dim_a} x {dim_b}")]
    BadFactorization { dim: usize, dim_a: usize, dim_b: usize },
    #[error("dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("dilation needs an exact encoding, err = {0}")]
    InexactEncoding(f64),
    #[error("state norm {0} is not 1")]
    NotUnitNorm(f64),
    #[error("map is not a bijection")]
    NotBijection,
    #[error("linear combination of zero encodings")]
    EmptyCombination,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// An encoding of `op / subnorm`, accurate to `err / subnorm` in operator norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEncoding {
    op: Operator,
    subnorm: f64,
    err: f64,
    ancilla_dim: usize,
}

impl BlockEncoding {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn subnorm(&self) -> f64 {
        self.subnorm
    }

    pub fn err(&self) -> f64 {
        self.err
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Diagonal of the encoded block `op / subnorm`, when diagonal.
    pub fn encoded_diagonal(&self) -> Option<Vec<f64>> {
        self.op.diagonal_entries().map(|d| d.into_iter().map(|v| v / self.subnorm).collect())
    }

    pub fn encoded_dense(&self) -> Result<nalgebra::DMatrix<Complex>, BlockError> {
        Ok(self.op.to_dense()? / Complex::new(self.subnorm, 0.0))
    }

    /// Encoded operator applied to `x`.
    pub fn apply_encoded(&self, x: &[Complex]) -> Vec<Complex> {
        self.op.apply(x).into_iter().map(|z| z / self.subnorm).collect()
    }
}

/// Wraps `m` as an exact encoding with the given subnormalization.
pub fn be_wrap(m: impl Into<Operator>, subnorm: f64) -> Result<BlockEncoding, BlockError> {
    let op = m.into();
    if !op.is_square() {
        return Err(BlockError::DimMismatch { left: op.dim(), right: 0 });
    }
    if !(subnorm > 0.0 && subnorm.is_finite()) {
        return Err(BlockError::InvalidParameter(format!("subnorm {subnorm}")));
    }
    let norm = op.norm();
    if norm > subnorm * (1.0 + CHECK_TOL) {
        return Err(BlockError::SubnormTooSmall { norm, subnorm });
    }
    Ok(BlockEncoding { op, subnorm, err: 0.0, ancilla_dim: 2 })
}

fn same_dim(a: &BlockEncoding, b: &BlockEncoding) -> Result<(), BlockError> {
    if a.dim() != b.dim() {
        return Err(BlockError::DimMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

pub fn be_product(b1: &BlockEncoding, b2: &BlockEncoding) -> Result<BlockEncoding, BlockError> {
    same_dim(b1, b2)?;
    Ok(BlockEncoding {
        op: b1.op.mul(&b2.op)?,
        subnorm: b1.subnorm * b2.subnorm,
        err: b1.subnorm * b2.err + b2.subnorm * b1.err,
        ancilla_dim: b1.ancilla_dim * b2.ancilla_dim,
    })
}

pub fn be_tensor(b1: &BlockEncoding, b2: &BlockEncoding) -> Result<BlockEncoding, BlockError> {
    Ok(BlockEncoding {
        op: b1.op.kron(&b2.op)?,
        subnorm: b1.subnorm * b2.subnorm,
        err: b1.subnorm * b2.err + b2.subnorm * b1.err,
        ancilla_dim: b1.ancilla_dim * b2.ancilla_dim,
    })
}

/// Uniform combination: encodes `sum_i sign_i * A_i / m` with subnormalization `m`.
pub fn be_lcu(bs: &[BlockEncoding], signs: &[i8]) -> Result<BlockEncoding, BlockError> {
    let first = bs.first().ok_or(BlockError::EmptyCombination)?;
    if signs.len() != bs.len() {
        return Err(BlockError::DimMismatch { left: bs.len(), right: signs.len() });
    }
    if signs.iter().any(|s| s.abs() != 1) {
        return Err(BlockError::InvalidParameter("signs must be +1 or -1".into()));
    }
    let mut op = first.op.scaled(f64::from(signs[0]) / first.subnorm);
    let mut err = first.err / first.subnorm;
    let mut ancilla = first.ancilla_dim;
    for (b, &s) in bs.iter().zip(signs).skip(1) {
        same_dim(first, b)?;
        op = op.add_scaled(&b.op, f64::from(s) / b.subnorm)?;
        err += b.err / b.subnorm;
        ancilla = ancilla.max(b.ancilla_dim);
    }
    Ok(BlockEncoding { op, subnorm: bs.len() as f64, err, ancilla_dim: ancilla * bs.len() })
}

pub fn be_scale(b: &BlockEncoding, factor: f64) -> Result<BlockEncoding, BlockError> {
    if factor.is_nan() || factor <= 1.0 {
        return Err(BlockError::BadFactor(factor));
    }
    Ok(BlockEncoding { subnorm: b.subnorm * factor, ancilla_dim: b.ancilla_dim * 2, ..b.clone() })
}

/// `P A P^T` for the projector `P` onto the first `m` coordinates.
pub fn restrict(b: &BlockEncoding, m: usize) -> Result<BlockEncoding, BlockError> {
    if m == 0 || m > b.dim() {
        return Err(BlockError::DimMismatch { left: m, right: b.dim() });
    }
    Ok(BlockEncoding { op: b.op.restrict_leading(m), ..b.clone() })
}

/// How a spectral function is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Approx {
    Exact,
    Chebyshev { degree: usize },
}

impl Approx {
    /// Chebyshev mode with the default degree for condition number `kappa`.
    pub fn chebyshev_default(kappa: f64, eps_target: f64) -> Self {
        Approx::Chebyshev { degree: default_degree(kappa, eps_target) }
    }
}

fn check_kappa(kappa: f64) -> Result<(), BlockError> {
    if kappa.is_finite() && kappa >= 1.0 {
        Ok(())
    } else {
        Err(BlockError::InvalidParameter(format!("condition number {kappa} must be >= 1")))
    }
}

fn check_band(value: f64, lo: f64) -> Result<(), BlockError> {
    if value == 0.0 || (value >= lo * (1.0 - CHECK_TOL) && value <= 1.0 + CHECK_TOL) {
        Ok(())
    } else {
        Err(BlockError::SpectrumOutOfRange { value, lo, hi: 1.0 })
    }
}

/// Encodes `A_enc^c / 2` for a nonnegative diagonal encoding whose nonzero
/// encoded eigenvalues lie in `[1/kappa_m, 1]`. Zero eigenvalues stay zero.
pub fn be_power(b: &BlockEncoding, c: f64, kappa_m: f64, mode: Approx) -> Result<BlockEncoding, BlockError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(BlockError::InvalidParameter(format!("exponent {c} must lie in (0, 1)")));
    }
    check_kappa(kappa_m)?;
    let diag = b.op.diagonal_entries().ok_or(BlockError::NotDiagonal)?;
    let lo = 1.0 / kappa_m;
    for v in &diag {
        let lam = v / b.subnorm;
        if lam < 0.0 {
            return Err(BlockError::SpectrumOutOfRange { value: lam, lo, hi: 1.0 });
        }
        check_band(lam, lo)?;
    }
    let out_scale = b.subnorm.powf(c);
    let propagated = c * kappa_m.powf(1.0 - c) * b.err / b.subnorm;
    let (values, approx_err) = match mode {
        Approx::Exact => (diag.iter().map(|v| if *v == 0.0 { 0.0 } else { v.powf(c) }).collect(), 0.0),
        Approx::Chebyshev { degree } => {
            let f = |x: f64| x.powf(c);
            let poly = Chebyshev::interpolate(f, lo, 1.0, degree);
            let sup = sup_error(f, &poly);
            let vals = diag
                .iter()
                .map(|v| if *v == 0.0 { 0.0 } else { out_scale * poly.eval((v / b.subnorm).clamp(lo, 1.0)) })
                .collect();
            (vals, sup)
        }
    };
    Ok(BlockEncoding {
        op: Operator::diagonal(values),
        subnorm: 2.0 * out_scale,
        err: out_scale * (approx_err + propagated),
        ancilla_dim: b.ancilla_dim * 2,
    })
}

/// Encodes `A_enc^+ / kappa_a`, where the nonzero encoded singular values lie in `[1/kappa_a, 1]`.
pub fn be_invert(b: &BlockEncoding, kappa_a: f64, mode: Approx) -> Result<BlockEncoding, BlockError> {
    check_kappa(kappa_a)?;
    let lo = 1.0 / kappa_a;
    let subnorm = kappa_a / b.subnorm;
    let propagated = kappa_a * b.err / b.subnorm;
    let op = match (&b.op, mode) {
        (Operator::Monomial(m), _) => {
            for v in m.values() {
                check_band((v / b.subnorm).abs(), lo)?;
            }
            match mode {
                Approx::Exact => Operator::Monomial(m.pseudo_inverse()),
                Approx::Chebyshev { degree } => {
                    let poly = inverse_poly(kappa_a, degree);
                    let pinv = m.pseudo_inverse();
                    // Replace each inverted value 1/v by the polynomial estimate of 1/(kappa * v_enc), rescaled.
                    let values: Vec<f64> = pinv
                        .values()
                        .iter()
                        .map(|&w| {
                            if w == 0.0 {
                                return 0.0;
                            }
                            let lam = 1.0 / (w * b.subnorm);
                            subnorm * lam.signum() * poly.eval(lam.abs().clamp(lo, 1.0))
                        })
                        .collect();
                    let rebuilt = match pinv.perm() {
                        Some(p) => Monomial::new(p.to_vec(), values)?,
                        None => Monomial::diagonal(values),
                    };
                    Operator::Monomial(rebuilt)
                }
            }
        }
        (Operator::Dense(d), Approx::Exact) => {
            let svd = d.clone().svd(false, false);
            for s in svd.singular_values.iter() {
                let lam = s / b.subnorm;
                if lam > CHECK_TOL * lo {
                    check_band(lam, lo)?;
                }
            }
            let pinv = d
                .clone()
                .pseudo_inverse(CHECK_TOL * lo * b.subnorm)
                .map_err(|e| BlockError::InvalidParameter(e.to_string()))?;
            Operator::Dense(pinv)
        }
        (Operator::Dense(_), Approx::Chebyshev { .. }) => return Err(BlockError::NotDiagonal),
    };
    let approx_err = match mode {
        Approx::Exact => 0.0,
        Approx::Chebyshev { degree } => {
            let poly = inverse_poly(kappa_a, degree);
            sup_error(|x| 1.0 / (kappa_a * x), &poly)
        }
    };
    Ok(BlockEncoding { op, subnorm, err: subnorm * approx_err + propagated, ancilla_dim: b.ancilla_dim * 2 })
}

fn inverse_poly(kappa: f64, degree: usize) -> Chebyshev {
    Chebyshev::interpolate(|x| 1.0 / (kappa * x), 1.0 / kappa, 1.0, degree)
}

/// A unit vector of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex>) -> Result<Self, BlockError> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(BlockError::NotUnitNorm(norm));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, BlockError> {
        Self::new(amps.iter().map(|&a| Complex::new(a, 0.0)).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self, BlockError> {
        if k >= dim {
            return Err(BlockError::DimMismatch { left: k, right: dim });
        }
        let mut amps = vec![Complex::new(0.0, 0.0); dim];
        amps[k] = Complex::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Equal-amplitude superposition over `support`.
    pub fn uniform(dim: usize, support: &[usize]) -> Result<Self, BlockError> {
        let mut amps = vec![Complex::new(0.0, 0.0); dim];
        let a = 1.0 / (support.len() as f64).sqrt();
        for &k in support {
            if k >= dim {
                return Err(BlockError::DimMismatch { left: k, right: dim });
            }
            amps[k] += a;
        }
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex] {
        &self.amps
    }

    /// `|0> (x) self` with the ancilla as the most significant index.
    pub fn with_zero_ancilla(&self) -> StateVector {
        let mut amps = self.amps.clone();
        amps.resize(2 * self.dim(), Complex::new(0.0, 0.0));
        StateVector { amps }
    }

    pub fn inner(&self, other: &StateVector) -> Complex {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// A relabeling `e_k -> e_{map[k]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSpec {
    map: Vec<usize>,
}

impl PermutationSpec {
    pub fn new(map: Vec<usize>) -> Result<Self, BlockError> {
        if !operator::is_bijection(&map) {
            return Err(BlockError::NotBijection);
        }
        Ok(Self { map })
    }

    /// Exchanges the basis states `a` and `b`.
    pub fn transposition(dim: usize, a: usize, b: usize) -> Result<Self, BlockError> {
        let mut map: Vec<usize> = (0..dim).collect();
        if a >= dim || b >= dim {
            return Err(BlockError::DimMismatch { left: a.max(b), right: dim });
        }
        map.swap(a, b);
        Ok(Self { map })
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (k, &t) in self.map.iter().enumerate() {
            inv[t] = k;
        }
        Self { map: inv }
    }

    pub fn encoding(&self) -> BlockEncoding {
        let m = Monomial::new(self.map.clone(), vec![1.0; self.map.len()]).expect("bijection checked");
        BlockEncoding { op: m.into(), subnorm: 1.0, err: 0.0, ancilla_dim: 1 }
    }
}

/// `U A U^dagger` via two products with the permutation unitary.
pub fn conjugate(u: &PermutationSpec, b: &BlockEncoding) -> Result<BlockEncoding, BlockError> {
    let left = be_product(&u.encoding(), b)?;
    be_product(&left, &u.inverse().encoding())
}

/// Encodes the reduced density matrix `Tr_A |phi><phi|` of a state on `A (x) B`
/// with amplitude index `a * dim_b + b`.
pub fn be_density(phi: &StateVector, dim_a: usize, dim_b: usize) -> Result<BlockEncoding, BlockError> {
    if dim_a == 0 || dim_b == 0 || dim_a * dim_b != phi.dim() {
        return Err(BlockError::BadFactorization { dim: phi.dim(), dim_a, dim_b });
    }
    let zero = Complex::new(0.0, 0.0);
    let mut diag = vec![0.0; dim_b];
    let mut off: Vec<(usize, usize, Complex)> = Vec::new();
    for a in 0..dim_a {
        let row = &phi.amps[a * dim_b..(a + 1) * dim_b];
        let nz: Vec<(usize, Complex)> = row.iter().cloned().enumerate().filter(|(_, z)| *z != zero).collect();
        for &(b1, z1) in &nz {
            for &(b2, z2) in &nz {
                if b1 == b2 {
                    diag[b1] += z1.norm_sqr();
                } else {
                    off.push((b1, b2, z1 * z2.conj()));
                }
            }
        }
    }
    let op = if off.is_empty() {
        Operator::diagonal(diag)
    } else {
        if dim_b > DENSE_LIMIT {
            return Err(BlockError::TooLarge { dim: dim_b, limit: DENSE_LIMIT });
        }
        let mut m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim_b,
            diag.iter().map(|&d| Complex::new(d, 0.0)),
        ));
        for (i, j, z) in off {
            m[(i, j)] += z;
        }
        Operator::Dense(m)
    };
    Ok(BlockEncoding { op, subnorm: 1.0, err: 0.0, ancilla_dim: 2 * dim_a })
}

/// Estimate of `Re <a|b>`: exact when `shots` is `None`, otherwise a seeded
/// Hadamard-test emulation returning `2k/n - 1` for `k ~ Binomial(n, (1 + Re<a|b>) / 2)`.
pub fn overlap(a: &StateVector, b: &StateVector, shots: Option<u64>, seed: u64) -> Result<f64, BlockError> {
    if a.dim() != b.dim() {
        return Err(BlockError::DimMismatch { left: a.dim(), right: b.dim() });
    }
    let exact = a.inner(b).re;
    let Some(n) = shots else {
        return Ok(exact);
    };
    if n == 0 {
        return Err(BlockError::InvalidParameter("shots must be positive".into()));
    }
    let prob = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let dist = Binomial::new(n, prob).map_err(|e| BlockError::InvalidParameter(e.to_string()))?;
    let k = dist.sample(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(2.0 * k as f64 / n as f64 - 1.0)
}

/// Standard error of the shot estimate of an overlap `r` from `shots` samples.
pub fn shot_std_error(r: f64, shots: u64) -> f64 {
    ((1.0 - r * r).max(0.0) / shots as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64], s: f64) -> BlockEncoding {
        be_wrap(Operator::diagonal(v.to_vec()), s).unwrap()
    }

    #[test]
    fn wrap_examples() {
        let id = diag(&[1.0; 4], 1.0);
        assert_eq!(id.encoded_diagonal().unwrap(), vec![1.0; 4]);
        let d = diag(&[1.0, 2.0, 4.0], 4.0);
        assert_eq!(d.encoded_diagonal().unwrap(), vec![0.25, 0.5, 1.0]);
        assert!(matches!(
            be_wrap(Operator::diagonal(vec![1.0, 2.0, 4.0]), 2.0),
            Err(BlockError::SubnormTooSmall { .. })
        ));
    }

    #[test]
    fn product_examples() {
        let h = diag(&[1.0, 1.0], 2.0);
        let p = be_product(&h, &h).unwrap();
        assert_eq!(p.subnorm(), 4.0);
        assert_eq!(p.encoded_diagonal().unwrap(), vec![0.25, 0.25]);
        assert!(matches!(be_product(&h, &diag(&[1.0], 1.0)), Err(BlockError::DimMismatch { .. })));
    }

    #[test]
    fn conjugation_keeps_spectrum() {
        let a = diag(&[0.1, 0.7, 0.3], 1.0);
        let u = PermutationSpec::new(vec![2, 0, 1]).unwrap();
        let c = conjugate(&u, &a).unwrap();
        let mut got = c.encoded_diagonal().unwrap();
        assert_eq!(got, vec![0.7, 0.3, 0.1]);
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.1, 0.3, 0.7]);
    }

    #[test]
    fn tensor_examples() {
        let d = diag(&[2.0, 3.0], 3.0);
        let i2 = diag(&[1.0, 1.0], 1.0);
        assert_eq!(be_tensor(&d, &i2).unwrap().op().diagonal_entries().unwrap(), vec![2.0, 2.0, 3.0, 3.0]);
        assert_eq!(be_tensor(&i2, &i2).unwrap().encoded_diagonal().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn lcu_examples() {
        let a = diag(&[0.5, 1.0], 2.0);
        let single = be_lcu(std::slice::from_ref(&a), &[1]).unwrap();
        assert_eq!(single.encoded_diagonal().unwrap(), a.encoded_diagonal().unwrap());
        let zero = be_lcu(&[a.clone(), a.clone()], &[1, -1]).unwrap();
        assert_eq!(zero.subnorm(), 2.0);
        assert_eq!(zero.encoded_diagonal().unwrap(), vec![0.0, 0.0]);
        assert_eq!(be_lcu(&[], &[]), Err(BlockError::EmptyCombination));
    }

    #[test]
    fn scale_examples() {
        let a = diag(&[1.0], 1.0);
        assert_eq!(be_scale(&a, 2.0).unwrap().encoded_diagonal().unwrap(), vec![0.5]);
        assert_eq!(be_scale(&a, 10.0).unwrap().encoded_diagonal().unwrap(), vec![0.1]);
        assert_eq!(be_scale(&a, 1.0), Err(BlockError::BadFactor(1.0)));
    }

    #[test]
    fn power_examples() {
        let a = diag(&[1.0 / 16.0, 1.0], 1.0);
        let p = be_power(&a, 0.25, 16.0, Approx::Exact).unwrap();
        assert_eq!(p.encoded_diagonal().unwrap(), vec![0.25, 0.5]);
        for c in [0.1, 0.5, 0.9] {
            let one = be_power(&diag(&[1.0], 1.0), c, 2.0, Approx::Exact).unwrap();
            assert_eq!(one.encoded_diagonal().unwrap(), vec![0.5]);
        }
        assert!(matches!(
            be_power(&diag(&[0.01, 1.0], 1.0), 0.25, 16.0, Approx::Exact),
            Err(BlockError::SpectrumOutOfRange { .. })
        ));
        let dense = be_wrap(Operator::dense_real(&[vec![0.5, 0.1], vec![0.1, 0.5]]), 1.0).unwrap();
        assert_eq!(be_power(&dense, 0.5, 4.0, Approx::Exact), Err(BlockError::NotDiagonal));
    }

    #[test]
    fn power_keeps_zeros_and_rescales() {
        let a = diag(&[0.0, 16.0, 1.0], 16.0);
        let p = be_power(&a, 0.25, 16.0, Approx::Exact).unwrap();
        assert_eq!(p.op().diagonal_entries().unwrap(), vec![0.0, 2.0, 1.0]);
        assert_eq!(p.subnorm(), 4.0);
    }

    #[test]
    fn invert_examples() {
        let a = diag(&[0.5, 1.0], 1.0);
        let inv = be_invert(&a, 2.0, Approx::Exact).unwrap();
        assert_eq!(inv.encoded_diagonal().unwrap(), vec![1.0, 0.5]);
        let s = diag(&[0.0, 0.5], 1.0);
        assert_eq!(be_invert(&s, 2.0, Approx::Exact).unwrap().encoded_diagonal().unwrap(), vec![0.0, 1.0]);
        assert!(matches!(
            be_invert(&diag(&[0.1], 1.0), 2.0, Approx::Exact),
            Err(BlockError::SpectrumOutOfRange { .. })
        ));
    }

    #[test]
    fn invert_chebyshev_tracks_error() {
        let a = diag(&[0.25, 0.6, 1.0, 0.0], 1.0);
        let exact = be_invert(&a, 4.0, Approx::Exact).unwrap().encoded_diagonal().unwrap();
        let approx = be_invert(&a, 4.0, Approx::Chebyshev { degree: 30 }).unwrap();
        let got = approx.encoded_diagonal().unwrap();
        let bound = approx.err() / approx.subnorm();
        for (e, g) in exact.iter().zip(&got) {
            assert!((e - g).abs() <= bound, "{e} {g} {bound}");
        }
        assert_eq!(got[3], 0.0);
    }

    #[test]
    fn density_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap();
        assert_eq!(
            be_density(&bell, 2, 2)
                .unwrap()
                .encoded_diagonal()
                .unwrap()
                .iter()
                .map(|v| (v * 1e12).round())
                .collect::<Vec<_>>(),
            vec![5e11, 5e11]
        );
        let prod = StateVector::from_real(&[0.6, 0.8, 0.0, 0.0]).unwrap();
        let rho = be_density(&prod, 2, 2).unwrap().encoded_dense().unwrap();
        assert!((rho[(0, 1)].re - 0.48).abs() < 1e-15 && (rho[(1, 1)].re - 0.64).abs() < 1e-15);
        assert!(matches!(be_density(&prod, 3, 2), Err(BlockError::BadFactorization { .. })));
    }

    #[test]
    fn overlap_examples() {
        let a = StateVector::basis(3, 1).unwrap();
        assert_eq!(overlap(&a, &a, None, 0).unwrap(), 1.0);
        assert_eq!(overlap(&a, &StateVector::basis(3, 2).unwrap(), None, 0).unwrap(), 0.0);
        let b = StateVector::from_real(&[0.8, 0.6, 0.0]).unwrap();
        let n = 100_000;
        let est = overlap(&a, &b, Some(n), 7).unwrap();
        assert!((est - 0.6).abs() <= 3.0 * (0.25 / n as f64).sqrt() * 2.0);
        assert_eq!(est, overlap(&a, &b, Some(n), 7).unwrap());
    }

    #[test]
    fn state_checks() {
        assert!(matches!(StateVector::from_real(&[1.0, 1.0]), Err(BlockError::NotUnitNorm(_))));
        assert!(PermutationSpec::new(vec![1, 1]).is_err());
    }
}
