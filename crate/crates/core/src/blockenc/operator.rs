//! Operator storage: monomial matrices (one nonzero per column) for the
//! permutation and diagonal operators of the pipeline, dense complex matrices
//! for verification at small dimension.

use nalgebra::DMatrix;

use super::{BlockError, Complex};

/// Largest dimension materialized densely.
pub const DENSE_LIMIT: usize = 1024;

/// `M e_k = values[k] * e_{perm[k]}`; a missing `perm` means the identity map.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    perm: Option<Vec<usize>>,
    values: Vec<f64>,
}

impl Monomial {
    pub fn diagonal(values: Vec<f64>) -> Self {
        Self { perm: None, values }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn new(perm: Vec<usize>, values: Vec<f64>) -> Result<Self, BlockError> {
        if perm.len() != values.len() {
            return Err(BlockError::DimMismatch { left: perm.len(), right: values.len() });
        }
        if !is_bijection(&perm) {
            return Err(BlockError::NotBijection);
        }
        Ok(Self { perm: Some(perm), values }.canonical())
    }

    fn canonical(mut self) -> Self {
        if self.perm.as_ref().is_some_and(|p| p.iter().enumerate().all(|(k, &t)| k == t)) {
            self.perm = None;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn perm(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row index of the nonzero in column `k`.
    pub fn target(&self, k: usize) -> usize {
        self.perm.as_ref().map_or(k, |p| p[k])
    }

    pub fn is_diagonal(&self) -> bool {
        self.perm.is_none() || self.values.iter().enumerate().all(|(k, &v)| v == 0.0 || self.target(k) == k)
    }

    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut d = vec![0.0; self.dim()];
        for (k, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                d[k] = v;
            }
        }
        Some(d)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { perm: self.perm.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Monomial) -> Monomial {
        let n = self.dim();
        let perm = match (&self.perm, &rhs.perm) {
            (None, None) => None,
            _ => Some((0..n).map(|k| self.target(rhs.target(k))).collect()),
        };
        let values = (0..n).map(|k| self.values[rhs.target(k)] * rhs.values[k]).collect();
        Monomial { perm, values }.canonical()
    }

    pub fn kron(&self, rhs: &Monomial) -> Monomial {
        let d2 = rhs.dim();
        let n = self.dim() * d2;
        let perm = match (&self.perm, &rhs.perm) {
            (None, None) => None,
            _ => Some((0..n).map(|k| self.target(k / d2) * d2 + rhs.target(k % d2)).collect()),
        };
        let values = (0..n).map(|k| self.values[k / d2] * rhs.values[k % d2]).collect();
        Monomial { perm, values }
    }

    pub fn adjoint(&self) -> Monomial {
        match &self.perm {
            None => self.clone(),
            Some(p) => {
                let mut inv = vec![0; p.len()];
                let mut values = vec![0.0; p.len()];
                for (k, &t) in p.iter().enumerate() {
                    inv[t] = k;
                    values[t] = self.values[k];
                }
                Monomial { perm: Some(inv), values }
            }
        }
    }

    /// Moore-Penrose pseudoinverse: the adjoint with nonzero values inverted.
    pub fn pseudo_inverse(&self) -> Monomial {
        let mut adj = self.adjoint();
        for v in &mut adj.values {
            if *v != 0.0 {
                *v = 1.0 / *v;
            }
        }
        adj
    }

    /// Leading `m x m` block. Columns whose image falls outside are zeroed and
    /// parked on the rows left free, so the result stays monomial.
    pub fn restrict_leading(&self, m: usize) -> Monomial {
        let Some(p) = &self.perm else {
            return Monomial::diagonal(self.values[..m].to_vec());
        };
        let mut used = vec![false; m];
        let mut perm = vec![usize::MAX; m];
        let mut values = vec![0.0; m];
        for k in 0..m {
            if p[k] < m {
                perm[k] = p[k];
                values[k] = self.values[k];
                used[p[k]] = true;
            }
        }
        let mut free = (0..m).filter(|&r| !used[r]);
        for slot in perm.iter_mut().filter(|t| **t == usize::MAX) {
            *slot = free.next().expect("as many free rows as dropped columns");
        }
        Monomial { perm: Some(perm), values }.canonical()
    }

    pub fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        let mut y = vec![Complex::new(0.0, 0.0); self.dim()];
        for (k, xk) in x.iter().enumerate() {
            y[self.target(k)] += xk * self.values[k];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(self.target(k), k)] = Complex::new(self.values[k], 0.0);
        }
        m
    }
}

pub(crate) fn is_bijection(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&t| t < map.len() && !std::mem::replace(&mut seen[t], true))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Monomial(Monomial),
    Dense(DMatrix<Complex>),
}

impl From<Monomial> for Operator {
    fn from(m: Monomial) -> Self {
        Operator::Monomial(m)
    }
}

impl From<DMatrix<Complex>> for Operator {
    fn from(m: DMatrix<Complex>) -> Self {
        Operator::Dense(m)
    }
}

impl Operator {
    pub fn diagonal(values: Vec<f64>) -> Self {
        Monomial::diagonal(values).into()
    }

    pub fn identity(dim: usize) -> Self {
        Monomial::identity(dim).into()
    }

    pub fn dense_real(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Operator::Dense(DMatrix::from_fn(n, m, |i, j| Complex::new(rows[i][j], 0.0)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Monomial(m) => m.dim(),
            Operator::Dense(d) => d.nrows(),
        }
    }

    pub fn is_square(&self) -> bool {
        match self {
            Operator::Monomial(_) => true,
            Operator::Dense(d) => d.is_square(),
        }
    }

    pub fn as_monomial(&self) -> Option<&Monomial> {
        match self {
            Operator::Monomial(m) => Some(m),
            Operator::Dense(_) => None,
        }
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        match self {
            Operator::Monomial(m) => m.norm(),
            Operator::Dense(d) if d.is_empty() => 0.0,
            Operator::Dense(d) => d.clone().svd(false, false).singular_values.max(),
        }
    }

    /// Real diagonal entries when the operator is diagonal with real values.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        match self {
            Operator::Monomial(m) => m.diagonal_entries(),
            Operator::Dense(d) => {
                let n = d.nrows();
                let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || d[(i, j)] == Complex::new(0.0, 0.0)));
                let real = (0..n).all(|i| d[(i, i)].im == 0.0);
                (off_zero && real).then(|| (0..n).map(|i| d[(i, i)].re).collect())
            }
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex>, BlockError> {
        match self {
            Operator::Dense(d) => Ok(d.clone()),
            Operator::Monomial(m) if m.dim() <= DENSE_LIMIT => Ok(m.to_dense()),
            Operator::Monomial(m) => Err(BlockError::TooLarge { dim: m.dim(), limit: DENSE_LIMIT }),
        }
    }

    pub fn scaled(&self, factor: f64) -> Operator {
        match self {
            Operator::Monomial(m) => m.scaled(factor).into(),
            Operator::Dense(d) => Operator::Dense(d * Complex::new(factor, 0.0)),
        }
    }

    pub fn mul(&self, rhs: &Operator) -> Result<Operator, BlockError> {
        match (self, rhs) {
            (Operator::Monomial(a), Operator::Monomial(b)) => Ok(a.compose(b).into()),
            _ => Ok(Operator::Dense(self.to_dense()? * rhs.to_dense()?)),
        }
    }

    pub fn kron(&self, rhs: &Operator) -> Result<Operator, BlockError> {
        match (self, rhs) {
            (Operator::Monomial(a), Operator::Monomial(b)) => Ok(a.kron(b).into()),
            _ => {
                let dim = self.dim() * rhs.dim();
                if dim > DENSE_LIMIT {
                    return Err(BlockError::TooLarge { dim, limit: DENSE_LIMIT });
                }
                Ok(Operator::Dense(self.to_dense()?.kronecker(&rhs.to_dense()?)))
            }
        }
    }

    /// `self + factor * rhs`, staying monomial when the supports line up.
    pub fn add_scaled(&self, rhs: &Operator, factor: f64) -> Result<Operator, BlockError> {
        if let (Operator::Monomial(a), Operator::Monomial(b)) = (self, rhs) {
            if let (Some(da), Some(db)) = (a.diagonal_entries(), b.diagonal_entries()) {
                return Ok(Operator::diagonal(da.iter().zip(&db).map(|(x, y)| x + factor * y).collect()));
            }
            if a.perm == b.perm {
                let values = a.values.iter().zip(&b.values).map(|(x, y)| x + factor * y).collect();
                return Ok(Monomial { perm: a.perm.clone(), values }.into());
            }
        }
        Ok(Operator::Dense(self.to_dense()? + rhs.to_dense()? * Complex::new(factor, 0.0)))
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Monomial(m) => m.adjoint().into(),
            Operator::Dense(d) => Operator::Dense(d.adjoint()),
        }
    }

    pub fn restrict_leading(&self, m: usize) -> Operator {
        match self {
            Operator::Monomial(mono) => mono.restrict_leading(m).into(),
            Operator::Dense(d) => Operator::Dense(d.view((0, 0), (m, m)).into_owned()),
        }
    }

    pub fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        match self {
            Operator::Monomial(m) => m.apply(x),
            Operator::Dense(d) => {
                let v = nalgebra::DVector::from_column_slice(x);
                (d * v).iter().cloned().collect()
            }
        }
    }
}
