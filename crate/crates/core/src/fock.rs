//! Truncated Fock-basis representation of one- and two-mode Gaussian states.
//!
//! Matrix elements come from the normalized multidimensional Hermite
//! recursion: with `Q = σ + I/2` the complex covariance in the `(a, a†)`
//! basis, `A = X (I - Q⁻¹)*` and `γ = β* - Aβ`,
//!
//! ```text
//! ⟨m|ρ|n⟩ = T · Ĝ(n, m),   T = exp(-½ β† Q⁻¹ β) / √det Q,
//! Ĝ(k + e_i) = (γ_i Ĝ(k) + Σ_j A_ij √k_j Ĝ(k - e_j)) / √(k_i + 1).
//! ```
//!
//! Pure states factorize, `Ĝ(n, m) = ĝ(n) ĝ(m)*`, which gives the state
//! vector directly at a fraction of the cost.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::gaussian::GaussianState;
use crate::linalg::{entropy_bits, hermitize, psd_sqrt, trace_norm, CMatrix};

/// Default Fock cutoff per mode for coherent-state runs.
pub const DEFAULT_CUTOFF: usize = 10;
/// Default Fock cutoff per mode when Alice sends thermal states.
pub const DEFAULT_THERMAL_CUTOFF: usize = 14;

/// Eigenvalues more negative than this are treated as a broken state rather
/// than truncation noise.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-9;

/// Trace deficit above which a conversion logs a truncation warning.
pub const TRUNCATION_WARNING: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hermitian, unit-trace density matrix on `cutoff^num_modes` Fock states.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    num_modes: usize,
    cutoff: usize,
    matrix: CMatrix,
    trace_deficit: f64,
    eigenvalues: Vec<f64>,
}

impl FockDensityMatrix {
    /// Wraps a (possibly truncated) positive matrix: records `1 - trace`,
    /// renormalizes, and clamps eigenvalues in `[-1e-9, 0)` to zero.
    pub fn from_unnormalized(num_modes: usize, cutoff: usize, matrix: CMatrix) -> Result<Self> {
        if !(1..=2).contains(&num_modes) {
            return domain(format!("{num_modes}-mode Fock matrices are not supported"));
        }
        if cutoff < 2 {
            return domain(format!("cutoff must be at least 2, got {cutoff}"));
        }
        let dim = cutoff.pow(num_modes as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_err = (&matrix - matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm_err > 1e-10 {
            return domain(format!("matrix is not Hermitian (deviation {herm_err:.3e})"));
        }
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return domain(format!("non-positive trace {trace}"));
        }
        let matrix = hermitize(&matrix).unscale(trace);
        let raw = crate::linalg::hermitian_eigenvalues(&matrix)?;
        if let Some(&worst) = raw.first() {
            if worst < -NEGATIVE_EIGENVALUE_TOL {
                return domain(format!("density matrix has eigenvalue {worst:.3e}"));
            }
        }
        let clamped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let trace_deficit = 1.0 - trace;
        if trace_deficit > TRUNCATION_WARNING {
            log::warn!("Fock truncation at cutoff {cutoff} lost {trace_deficit:.3e} of the trace");
        }
        Ok(Self {
            num_modes,
            cutoff,
            matrix,
            trace_deficit,
            eigenvalues: clamped.iter().map(|v| v / total).collect(),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `1 - trace` of the truncated matrix before renormalization.
    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    /// Clamped, renormalized eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Applies `exp(iφ_j n_j)` on each mode.
    pub fn phase_rotated(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.num_modes {
            return Err(Error::ShapeMismatch("one phase per mode expected".into()));
        }
        let c = self.cutoff;
        let phase_of = |idx: usize| -> Complex64 {
            let (n1, n2) = if self.num_modes == 1 { (idx, 0) } else { (idx / c, idx % c) };
            let mut angle = phases[0] * n1 as f64;
            if self.num_modes == 2 {
                angle += phases[1] * n2 as f64;
            }
            Complex64::from_polar(1.0, angle)
        };
        let m = CMatrix::from_fn(self.dim(), self.dim(), |r, col| {
            phase_of(r) * self.matrix[(r, col)] * phase_of(col).conj()
        });
        Self::from_unnormalized(self.num_modes, self.cutoff, m)
    }

    /// Reduced state of mode `keep` (0 or 1) of a two-mode matrix.
    pub fn partial_trace(&self, keep: usize) -> Result<Self> {
        if self.num_modes != 2 || keep > 1 {
            return domain("partial trace needs a two-mode state and keep in {0, 1}");
        }
        let c = self.cutoff;
        let m = CMatrix::from_fn(c, c, |r, col| {
            (0..c)
                .map(|j| {
                    let (a, b) = if keep == 0 { (r * c + j, col * c + j) } else { (j * c + r, j * c + col) };
                    self.matrix[(a, b)]
                })
                .sum()
        });
        Self::from_unnormalized(1, c, m)
    }
}

/// Precomputed quantities for converting Gaussian states that share one
/// covariance matrix.
#[derive(Debug, Clone)]
pub(crate) struct FockKernel {
    modes: usize,
    q_inv: CMatrix,
    a: CMatrix,
    a_lower: CMatrix,
    sqrt_det_q: f64,
    pure: bool,
}

impl FockKernel {
    pub(crate) fn new(cm: &DMatrix<f64>) -> Result<Self> {
        let modes = cm.nrows() / 2;
        let dim = 2 * modes;
        // (q1, p1, q2, p2) -> (q1, q2, p1, p2)
        let order: Vec<usize> = (0..modes).map(|i| 2 * i).chain((0..modes).map(|i| 2 * i + 1)).collect();
        let v = DMatrix::from_fn(dim, dim, |r, c| Complex64::new(cm[(order[r], order[c])], 0.0));
        let mut w = CMatrix::zeros(dim, dim);
        for i in 0..modes {
            w[(i, i)] = Complex64::new(0.5, 0.0);
            w[(i, i + modes)] = 0.5 * I;
            w[(i + modes, i)] = Complex64::new(0.5, 0.0);
            w[(i + modes, i + modes)] = -0.5 * I;
        }
        let q = (&w * v * w.adjoint()).map(|z| z.conj()) + CMatrix::identity(dim, dim).scale(0.5);
        let q = hermitize(&q);
        let det_q = q.determinant().re;
        if !(det_q > 0.0) {
            return domain("covariance matrix gives a singular Husimi matrix");
        }
        let q_inv = q
            .try_inverse()
            .ok_or_else(|| Error::Domain("Husimi matrix is not invertible".into()))?;
        let diff = (CMatrix::identity(dim, dim) - &q_inv).map(|z| z.conj());
        let mut a = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            let src = if r < modes { r + modes } else { r - modes };
            a.row_mut(r).copy_from(&diff.row(src));
        }
        let off_block = a.view((0, modes), (modes, modes)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let a_lower = a.view((modes, modes), (modes, modes)).into_owned();
        Ok(Self { modes, q_inv, a, a_lower, sqrt_det_q: det_q.sqrt(), pure: off_block < 1e-10 })
    }

    pub(crate) fn is_pure(&self) -> bool {
        self.pure
    }

    /// Prefactor `T` and loop vector `γ` for a state with the given mean.
    fn prefactor_and_gamma(&self, mean: &[f64]) -> (f64, Vec<Complex64>) {
        let m = self.modes;
        let mut beta = vec![Complex64::new(0.0, 0.0); 2 * m];
        for i in 0..m {
            let alpha = Complex64::new(mean[2 * i], mean[2 * i + 1]) * 0.5;
            beta[i] = alpha;
            beta[i + m] = alpha.conj();
        }
        let mut quad = Complex64::new(0.0, 0.0);
        for r in 0..2 * m {
            for c in 0..2 * m {
                quad += beta[r] * self.q_inv[(r, c)] * beta[c].conj();
            }
        }
        let t = (-0.5 * quad.re).exp() / self.sqrt_det_q;
        let gamma = (0..2 * m)
            .map(|r| beta[r].conj() - (0..2 * m).map(|c| self.a[(r, c)] * beta[c]).sum::<Complex64>())
            .collect();
        (t, gamma)
    }

    /// Unnormalized truncated density matrix for the given mean.
    pub(crate) fn density(&self, mean: &[f64], cutoff: usize) -> CMatrix {
        let (t, gamma) = self.prefactor_and_gamma(mean);
        let g = hermite_table(&self.a, &gamma, cutoff);
        let d = cutoff.pow(self.modes as u32);
        CMatrix::from_fn(d, d, |ket, bra| g[bra * d + ket] * t)
    }

    /// Truncated state vector (up to a global phase) for the given mean.
    /// Only meaningful when the kernel is pure.
    pub(crate) fn amplitudes_into(&self, mean: &[f64], cutoff: usize, out: &mut [Complex64]) {
        let m = self.modes;
        let (t, gamma) = self.prefactor_and_gamma(mean);
        hermite_table_into(&self.a_lower, &gamma[m..], cutoff, out);
        let s = t.sqrt();
        for v in out.iter_mut() {
            *v *= s;
        }
    }
}

fn hermite_table(a: &CMatrix, gamma: &[Complex64], cutoff: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); cutoff.pow(gamma.len() as u32)];
    hermite_table_into(a, gamma, cutoff, &mut out);
    out
}

/// Fills `out` (row-major, last index fastest) with the normalized Hermite
/// table `Ĝ(k) = G(k) / √(k!)`.
fn hermite_table_into(a: &CMatrix, gamma: &[Complex64], cutoff: usize, out: &mut [Complex64]) {
    let dims = gamma.len();
    let mut strides = vec![1usize; dims];
    for d in (0..dims.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * cutoff;
    }
    let sqrt: Vec<f64> = (0..=cutoff).map(|k| (k as f64).sqrt()).collect();
    let mut digits = vec![0usize; dims];
    out[0] = Complex64::new(1.0, 0.0);
    for flat in 1..out.len() {
        // increment the mixed-radix counter
        let mut d = dims - 1;
        loop {
            digits[d] += 1;
            if digits[d] < cutoff {
                break;
            }
            digits[d] = 0;
            d -= 1;
        }
        let i = digits.iter().position(|&k| k > 0).unwrap_or(0);
        let prev = flat - strides[i];
        let mut acc = gamma[i] * out[prev];
        for j in 0..dims {
            let kj = if j == i { digits[j] - 1 } else { digits[j] };
            if kj > 0 {
                acc += a[(i, j)] * sqrt[kj] * out[prev - strides[j]];
            }
        }
        out[flat] = acc / sqrt[digits[i]];
    }
}

/// Truncated Fock-basis density matrix of a one- or two-mode Gaussian state.
pub fn gaussian_to_fock(state: &GaussianState, cutoff: usize) -> Result<FockDensityMatrix> {
    let modes = state.num_modes();
    if !(1..=2).contains(&modes) {
        return Err(Error::Unsupported(format!("{modes}-mode Fock conversion")));
    }
    if cutoff < 2 {
        return domain(format!("cutoff must be at least 2, got {cutoff}"));
    }
    let kernel = FockKernel::new(state.cm())?;
    let rho = kernel.density(state.mean().as_slice(), cutoff);
    FockDensityMatrix::from_unnormalized(modes, cutoff, rho)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &FockDensityMatrix) -> f64 {
    entropy_bits(rho.eigenvalues()).max(0.0)
}

/// Root fidelity `‖√a √b‖₁`.
pub fn trace_fidelity(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<f64> {
    if a.num_modes() != b.num_modes() || a.cutoff() != b.cutoff() {
        return Err(Error::ShapeMismatch(format!(
            "({} modes, cutoff {}) vs ({} modes, cutoff {})",
            a.num_modes(),
            a.cutoff(),
            b.num_modes(),
            b.cutoff()
        )));
    }
    matrix_fidelity(a.matrix(), b.matrix())
}

pub(crate) fn matrix_fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    Ok(trace_norm(&(psd_sqrt(a)? * psd_sqrt(b)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{make_tmsv, GaussianState};
    use nalgebra::DVector;
    use approx::assert_abs_diff_eq;

    fn thermal(omega: f64) -> GaussianState {
        GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * omega).unwrap()
    }

    #[test]
    fn vacuum_is_projector_on_zero() {
        let rho = gaussian_to_fock(&thermal(1.0), 6).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let expect = if r == 0 && c == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(rho.matrix()[(r, c)].re, expect, epsilon = 1e-15);
                assert_abs_diff_eq!(rho.matrix()[(r, c)].im, 0.0, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_state_phase_convention() {
        // mean (0, 2) is α = i; ⟨0|ρ|1⟩ = e^{-|α|²} α*
        let s = GaussianState::new(DVector::from_vec(vec![0.0, 2.0]), DMatrix::identity(2, 2)).unwrap();
        let rho = gaussian_to_fock(&s, 25).unwrap();
        let expect = Complex64::new(0.0, -1.0) * (-1.0f64).exp();
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].re, expect.re, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn thermal_geometric_distribution() {
        let rho = gaussian_to_fock(&thermal(3.0), 25).unwrap();
        for n in 0..25 {
            assert_abs_diff_eq!(rho.matrix()[(n, n)].re * (1.0 - rho.trace_deficit()), 0.5 * 0.5f64.powi(n as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_kernel_matches_density() {
        // TMSV with the second mode squeezed along a rotated axis
        let squeeze = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.3, 1.0 / 1.3]));
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let mut rot = DMatrix::identity(4, 4);
        rot.view_mut((2, 2), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, &[c, -s, s, c]));
        let sym = rot * squeeze;
        let cm = &sym * make_tmsv(1.8).unwrap().cm() * sym.transpose();
        let kernel = FockKernel::new(&cm).unwrap();
        assert!(kernel.is_pure());
        let mean = [0.3, -0.7, 1.1, 0.4];
        let c = 6;
        let rho = kernel.density(&mean, c);
        let mut psi = vec![Complex64::new(0.0, 0.0); c * c];
        kernel.amplitudes_into(&mean, c, &mut psi);
        for r in 0..c * c {
            for col in 0..c * c {
                let outer = psi[r] * psi[col].conj();
                assert!((outer - rho[(r, col)]).norm() < 1e-13);
            }
        }
        assert!(!FockKernel::new(&(DMatrix::identity(4, 4) * 1.5)).unwrap().is_pure());
    }

    #[test]
    fn maximally_mixed_entropy() {
        let m = CMatrix::identity(4, 4).scale(0.25);
        let rho = FockDensityMatrix::from_unnormalized(2, 2, m).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_of_fock_states() {
        let mut zero = CMatrix::zeros(3, 3);
        zero[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut one = CMatrix::zeros(3, 3);
        one[(1, 1)] = Complex64::new(1.0, 0.0);
        let a = FockDensityMatrix::from_unnormalized(1, 3, zero).unwrap();
        let b = FockDensityMatrix::from_unnormalized(1, 3, one).unwrap();
        assert_abs_diff_eq!(trace_fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_fidelity(&a, &b).unwrap(), 0.0, epsilon = 1e-12);
        let c = gaussian_to_fock(&thermal(1.0), 4).unwrap();
        assert!(matches!(trace_fidelity(&a, &c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gaussian_to_fock(&thermal(1.0), 1).is_err());
        let three = GaussianState::new(DVector::zeros(6), DMatrix::identity(6, 6)).unwrap();
        assert!(matches!(gaussian_to_fock(&three, 4), Err(Error::Unsupported(_))));
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 0)] = Complex64::new(2.0, 0.0);
        bad[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(FockDensityMatrix::from_unnormalized(1, 2, bad).is_err());
    }
}
