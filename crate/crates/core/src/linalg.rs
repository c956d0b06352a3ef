//! Small Hermitian-matrix helpers shared by the Fock engine and the CQ toolkit.

use nalgebra::{ComplexField, DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigen-decomposition of a symmetric / Hermitian matrix.
///
/// nalgebra's implicit QR can return NaN on matrices with many exactly-zero
/// rows (truncated Fock states of nearly-vacuum modes look like that), so the
/// matrix is shifted by a multiple of the identity first and the shift is
/// removed from the eigenvalues afterwards.
pub fn symmetric_eigen<T>(m: &DMatrix<T>) -> Result<SymmetricEigen<T, Dyn>>
where
    T: ComplexField<RealField = f64>,
{
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let scale = sym.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max).max(1e-300);
    for factor in [1.0, 2.371, -1.618, 0.0] {
        let shift = factor * scale;
        let shifted = &sym + DMatrix::<T>::identity(n, n).scale(shift);
        let mut eig = SymmetricEigen::new(shifted);
        if eig.eigenvalues.iter().all(|v| v.is_finite()) && eig.eigenvectors.iter().all(|z| z.clone().is_finite()) {
            eig.eigenvalues.add_scalar_mut(-shift);
            return Ok(eig);
        }
    }
    Err(Error::Resolution(format!("eigen-decomposition of a {n}x{n} matrix did not converge")))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let mut ev: Vec<f64> = symmetric_eigen(m)?.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Principal square root of a positive semidefinite matrix; small negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = symmetric_eigen(m)?;
    let roots = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    Ok(&eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint())
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Shannon entropy in bits of a probability vector, with `0 log 0 = 0`.
pub fn entropy_bits<'a>(probs: impl IntoIterator<Item = &'a f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mostly_zero_matrix_has_finite_spectrum() {
        // rank-two block padded with zero rows, the shape that trips the unshifted solver
        let mut m = CMatrix::zeros(196, 196);
        m[(0, 0)] = Complex64::new(0.7, 0.0);
        m[(14, 14)] = Complex64::new(0.3, 0.0);
        m[(0, 14)] = Complex64::new(0.1, 0.2);
        m[(14, 0)] = Complex64::new(0.1, -0.2);
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert!(ev.iter().all(|v| v.is_finite()));
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let disc = ((0.7f64 - 0.3).powi(2) + 4.0 * 0.05).sqrt();
        assert!((ev[195] - 0.5 * (1.0 + disc)).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = CMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.5),
            Complex64::new(0.5, -0.5),
            Complex64::new(1.0, 0.0),
        ]);
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * &r - &m).iter().all(|z| z.norm() < 1e-12));
    }
}
