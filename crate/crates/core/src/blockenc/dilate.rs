//! Explicit unitary completion of an encoded contraction.
//!
//! `U = [[A, (I - A A^dagger)^{1/2}], [(I - A^dagger A)^{1/2}, -A^dagger]]`
//! with the ancilla as the most significant index.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{BlockEncoding, BlockError, Complex, Operator, StateVector};

/// Largest dimension accepted by [`be_dilate`].
pub const DILATE_LIMIT: usize = 64;

pub fn be_dilate(b: &BlockEncoding) -> Result<DMatrix<Complex>, BlockError> {
    let n = b.dim();
    if n > DILATE_LIMIT {
        return Err(BlockError::TooLarge { dim: n, limit: DILATE_LIMIT });
    }
    if b.err() != 0.0 {
        return Err(BlockError::InexactEncoding(b.err()));
    }
    let a = b.encoded_dense()?;
    let ad = a.adjoint();
    let eye = DMatrix::<Complex>::identity(n, n);
    let top_right = psd_sqrt(&eye - &a * &ad);
    let bottom_left = psd_sqrt(&eye - &ad * &a);
    let mut u = DMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&a);
    u.view_mut((0, n), (n, n)).copy_from(&top_right);
    u.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    u.view_mut((n, n), (n, n)).copy_from(&(-ad));
    Ok(u)
}

/// Square root of a Hermitian positive semidefinite matrix; tiny negative eigenvalues are clipped.
fn psd_sqrt(m: DMatrix<Complex>) -> DMatrix<Complex> {
    let herm = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let roots = eig.eigenvalues.map(|l| Complex::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// `U (|0> (x) phi)` for the dilation of `b`, without forming `U` when the
/// operator is monomial: `|0> A phi + |1> (I - A^dagger A)^{1/2} phi`.
pub fn apply_dilated(b: &BlockEncoding, phi: &StateVector) -> Result<StateVector, BlockError> {
    let n = b.dim();
    if phi.dim() != n {
        return Err(BlockError::DimMismatch { left: phi.dim(), right: n });
    }
    match b.op() {
        Operator::Monomial(m) => {
            let mut amps = b.apply_encoded(phi.amps());
            amps.extend(phi.amps().iter().zip(m.values()).map(|(z, v)| {
                let lam = v / b.subnorm();
                z * (1.0 - lam * lam).max(0.0).sqrt()
            }));
            StateVector::new(amps)
        }
        Operator::Dense(_) => {
            let u = be_dilate(&BlockEncoding { err: 0.0, ..b.clone() })?;
            let x = nalgebra::DVector::from_column_slice(phi.with_zero_ancilla().amps());
            StateVector::new((u * x).iter().cloned().collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{be_wrap, Operator};
    use super::*;

    fn unitarity_defect(u: &DMatrix<Complex>) -> f64 {
        let n = u.nrows();
        (u * u.adjoint() - DMatrix::<Complex>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_block() {
        let b = be_wrap(Operator::diagonal(vec![0.0; 2]), 1.0).unwrap();
        let u = be_dilate(&b).unwrap();
        assert!(unitarity_defect(&u) < 1e-14);
        for i in 0..2 {
            assert!((u[(i, 2 + i)].re - 1.0).abs() < 1e-14);
            assert!((u[(2 + i, i)].re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn half_scalar_is_rotation() {
        let b = be_wrap(Operator::diagonal(vec![1.0]), 2.0).unwrap();
        let u = be_dilate(&b).unwrap();
        let r = 3f64.sqrt() / 2.0;
        let want = [[0.5, r], [r, -0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((u[(i, j)].re - want[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dense_block_and_monomial_action_agree() {
        let b = be_wrap(Operator::diagonal(vec![0.3, -0.9, 0.0]), 1.0).unwrap();
        let phi = StateVector::from_real(&[0.6, 0.0, 0.8]).unwrap();
        let fast = apply_dilated(&b, &phi).unwrap();
        let u = be_dilate(&b).unwrap();
        let slow = &u * nalgebra::DVector::from_column_slice(phi.with_zero_ancilla().amps());
        for (a, z) in fast.amps().iter().zip(slow.iter()) {
            assert!((a - z).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_inexact_and_large() {
        let big = be_wrap(Operator::identity(65), 1.0).unwrap();
        assert!(matches!(be_dilate(&big), Err(BlockError::TooLarge { .. })));
    }
}
