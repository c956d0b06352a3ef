//! Phase-space description of the protocol's Gaussian states.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ...)` and measured in
//! shot-noise units, so the vacuum covariance matrix is the identity.

use nalgebra::{DMatrix, DVector, Matrix2};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::linalg::symmetric_eigen;

/// Slack allowed below 1 for symplectic eigenvalues of a physical state.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Mean vector and covariance matrix of a Gaussian state of 1 to 3 modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cm: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking shape, symmetry and the uncertainty principle.
    pub fn new(mean: DVector<f64>, cm: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 || dim > 6 {
            return domain(format!("mean vector length {dim} is not 2, 4 or 6"));
        }
        if cm.nrows() != dim || cm.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "covariance matrix is {}x{}, expected {dim}x{dim}",
                cm.nrows(),
                cm.ncols()
            )));
        }
        if mean.iter().chain(cm.iter()).any(|v| !v.is_finite()) {
            return domain("non-finite entry in mean or covariance matrix");
        }
        let scale = cm.amax().max(1.0);
        if (&cm - cm.transpose()).amax() > 1e-12 * scale {
            return domain("covariance matrix is not symmetric");
        }
        let cm = (&cm + cm.transpose()) * 0.5;
        let state = Self { mean, cm };
        let nu = state.symplectic_eigenvalues()?;
        if let Some(bad) = nu.iter().find(|&&v| v < 1.0 - PHYSICALITY_TOL) {
            return domain(format!("unphysical covariance matrix: symplectic eigenvalue {bad}"));
        }
        Ok(state)
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cm(&self) -> &DMatrix<f64> {
        &self.cm
    }

    /// Symplectic eigenvalues in ascending order (one per mode).
    ///
    /// Computed as the square roots of the eigenvalues of `-(V^½ Ω V^½)²`,
    /// each of which appears twice.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cm)
    }

    /// True when every symplectic eigenvalue is one (within `tol`).
    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|v| (v - 1.0).abs() < tol))
            .unwrap_or(false)
    }

    /// Reduced state of the listed modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            if m >= self.num_modes() {
                return domain(format!("mode index {m} out of range"));
            }
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cm = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cm[(idx[r], idx[c])]);
        Ok(Self { mean, cm })
    }
}

/// Symplectic form `⊕ [[0, 1], [-1, 0]]` for `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

fn symplectic_eigenvalues(cm: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cm.nrows();
    let eig = symmetric_eigen(cm)?;
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return domain("covariance matrix is not positive definite");
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = &root * symplectic_form(n / 2) * &root;
    let gram = k.transpose() * k;
    let gram = (&gram + gram.transpose()) * 0.5;
    let mut sq: Vec<f64> = symmetric_eigen(&gram)?.eigenvalues.iter().copied().collect();
    sq.sort_by(f64::total_cmp);
    Ok(sq.chunks(2).map(|c| (0.5 * (c[0] + c[1])).max(0.0).sqrt()).collect())
}

/// Alice's alphabet and reconciliation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Alphabet size; also the cardinality of Bob's decoded symbol.
    pub n: usize,
    /// Displacement amplitude of each signal.
    pub alpha: f64,
    /// Trusted preparation noise, twice the mean thermal photon number.
    pub nu_th: f64,
    /// Reconciliation efficiency.
    pub xi: f64,
}

impl ProtocolParams {
    pub fn new(n: usize, alpha: f64, nu_th: f64, xi: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("alphabet size must be at least 2, got {n}"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return domain(format!("alpha must be finite and non-negative, got {alpha}"));
        }
        if !(nu_th.is_finite() && nu_th >= 0.0) {
            return domain(format!("nu_th must be finite and non-negative, got {nu_th}"));
        }
        if !(0.0..=1.0).contains(&xi) {
            return domain(format!("reconciliation efficiency must lie in [0, 1], got {xi}"));
        }
        Ok(Self { n, alpha, nu_th, xi })
    }

    /// Encoding phase `2πk/N`.
    pub fn phase(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n as f64
    }

    pub fn with_xi(self, xi: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, self.nu_th, xi)
    }

    pub fn with_nu_th(self, nu_th: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, nu_th, self.xi)
    }
}

/// Thermal-loss channel with transmissivity `tau` and injected noise `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    tau: f64,
    omega: f64,
}

impl ChannelParams {
    pub fn new(tau: f64, omega: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return domain(format!("transmissivity must lie in (0, 1], got {tau}"));
        }
        if !(omega.is_finite() && omega >= 1.0) {
            return domain(format!("thermal noise omega must be finite and >= 1, got {omega}"));
        }
        Ok(Self { tau, omega })
    }

    /// Channel with excess noise `eps` referred to the input.
    ///
    /// At `tau = 1` only `eps = 0` is representable; any other value would
    /// need infinite `omega`.
    pub fn from_excess_noise(tau: f64, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return domain(format!("excess noise must be finite and non-negative, got {eps}"));
        }
        if tau == 1.0 {
            if eps == 0.0 {
                return Self::new(1.0, 1.0);
            }
            return domain("a lossless channel cannot carry non-zero excess noise");
        }
        Self::new(tau, 1.0 + tau * eps / (1.0 - tau))
    }

    /// Channel with variance `v_eps = tau * eps`.
    pub fn from_v_eps(tau: f64, v_eps: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return domain(format!("transmissivity must be positive, got {tau}"));
        }
        Self::from_excess_noise(tau, v_eps / tau)
    }

    pub fn from_attenuation_db(db: f64, eps: f64) -> Result<Self> {
        if !(db.is_finite() && db >= 0.0) {
            return domain(format!("attenuation must be finite and non-negative, got {db}"));
        }
        Self::from_excess_noise(10f64.powf(-db / 10.0), eps)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Excess noise `(1 - τ)(ω - 1) / τ`.
    pub fn excess_noise(&self) -> f64 {
        (1.0 - self.tau) * (self.omega - 1.0) / self.tau
    }

    /// `V_ε = τ ε = (1 - τ)(ω - 1)`.
    pub fn v_eps(&self) -> f64 {
        (1.0 - self.tau) * (self.omega - 1.0)
    }

    pub fn attenuation_db(&self) -> f64 {
        -10.0 * self.tau.log10()
    }

    /// Variance of each heterodyne quadrature at Bob, `2 + τν_th + (1 - τ)(ω - 1)`.
    pub fn big_omega(&self, nu_th: f64) -> f64 {
        2.0 + self.tau * nu_th + (1.0 - self.tau) * (self.omega - 1.0)
    }
}

/// Displaced thermal state encoding symbol `k`.
pub fn make_signal_state(k: usize, params: &ProtocolParams) -> Result<GaussianState> {
    if k >= params.n {
        return domain(format!("symbol {k} out of range for alphabet of size {}", params.n));
    }
    let phase = params.phase(k);
    let mean = DVector::from_vec(vec![params.alpha * phase.cos(), params.alpha * phase.sin()]);
    let cm = DMatrix::identity(2, 2) * (params.nu_th + 1.0);
    GaussianState::new(mean, cm)
}

/// Two-mode squeezed vacuum with local variance `omega`.
pub fn make_tmsv(omega: f64) -> Result<GaussianState> {
    if !(omega.is_finite() && omega >= 1.0) {
        return domain(format!("TMSV variance must be finite and >= 1, got {omega}"));
    }
    let c = (omega * omega - 1.0).sqrt();
    #[rustfmt::skip]
    let cm = DMatrix::from_row_slice(4, 4, &[
        omega, 0.0,   c,     0.0,
        0.0,   omega, 0.0,   -c,
        c,     0.0,   omega, 0.0,
        0.0,   -c,    0.0,   omega,
    ]);
    GaussianState::new(DVector::zeros(4), cm)
}

/// Symplectic matrix of a beam splitter with transmissivity `tau`.
pub fn beam_splitter(tau: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&tau) {
        return domain(format!("beam-splitter transmissivity must lie in [0, 1], got {tau}"));
    }
    let t = tau.sqrt();
    let r = (1.0 - tau).sqrt();
    let mut s = DMatrix::zeros(4, 4);
    for i in 0..2 {
        s[(i, i)] = t;
        s[(i, i + 2)] = r;
        s[(i + 2, i)] = -r;
        s[(i + 2, i + 2)] = t;
    }
    Ok(s)
}

/// Joint state of Bob's mode and Eve's memory modes `(B, e', E0)` after the
/// entangling cloner acts on a single-mode signal.
pub fn channel_output(signal: &GaussianState, ch: &ChannelParams) -> Result<GaussianState> {
    if signal.num_modes() != 1 {
        return domain("channel input must be a single-mode state");
    }
    let tmsv = make_tmsv(ch.omega())?;
    let mut mean = DVector::zeros(6);
    mean.rows_mut(0, 2).copy_from(signal.mean());
    let mut cm = DMatrix::zeros(6, 6);
    cm.view_mut((0, 0), (2, 2)).copy_from(signal.cm());
    cm.view_mut((2, 2), (4, 4)).copy_from(tmsv.cm());
    let mut s = DMatrix::identity(6, 6);
    s.view_mut((0, 0), (4, 4)).copy_from(&beam_splitter(ch.tau())?);
    GaussianState::new(&s * mean, &s * cm * s.transpose())
}

/// Linear map taking a heterodyne outcome on one mode to the conditional
/// state of the remaining modes.
///
/// The conditional covariance does not depend on the outcome, so it is
/// computed once; the conditional mean is affine in the outcome.
#[derive(Debug, Clone)]
pub struct HeterodyneMap {
    cm: DMatrix<f64>,
    mean_rest: DVector<f64>,
    mean_measured: nalgebra::Vector2<f64>,
    gain: DMatrix<f64>,
}

impl HeterodyneMap {
    pub fn new(joint: &GaussianState, measured_mode: usize) -> Result<Self> {
        let modes = joint.num_modes();
        if modes < 2 {
            return domain("heterodyne conditioning needs at least two modes");
        }
        if measured_mode >= modes {
            return domain(format!("measured mode {measured_mode} out of range"));
        }
        let rest: Vec<usize> = (0..2 * modes)
            .filter(|&i| i / 2 != measured_mode)
            .collect();
        let meas = [2 * measured_mode, 2 * measured_mode + 1];
        let v = joint.cm();
        let b = Matrix2::from_fn(|r, c| v[(meas[r], meas[c])]);
        let c = DMatrix::from_fn(2, rest.len(), |r, col| v[(meas[r], rest[col])]);
        let rest_cm = DMatrix::from_fn(rest.len(), rest.len(), |r, col| v[(rest[r], rest[col])]);
        let inv = (b + Matrix2::identity())
            .try_inverse()
            .ok_or_else(|| Error::Domain("B + I is singular".into()))?;
        let inv = DMatrix::from_fn(2, 2, |r, col| inv[(r, col)]);
        let gain = c.transpose() * inv;
        let cm = &rest_cm - &gain * &c;
        let cm = (&cm + cm.transpose()) * 0.5;
        Ok(Self {
            cm,
            mean_rest: DVector::from_iterator(rest.len(), rest.iter().map(|&i| joint.mean()[i])),
            mean_measured: nalgebra::Vector2::new(joint.mean()[meas[0]], joint.mean()[meas[1]]),
            gain,
        })
    }

    pub fn conditional_cm(&self) -> &DMatrix<f64> {
        &self.cm
    }

    /// `Cᵀ(B + I)⁻¹`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn conditional_mean(&self, q: f64, p: f64) -> DVector<f64> {
        let innovation = DVector::from_vec(vec![self.mean_measured[0] - q, self.mean_measured[1] - p]);
        &self.mean_rest - &self.gain * innovation
    }

    pub fn condition(&self, q: f64, p: f64) -> Result<GaussianState> {
        GaussianState::new(self.conditional_mean(q, p), self.cm.clone())
    }
}

/// State of the unmeasured modes after heterodyning `measured_mode` with outcome `(q, p)`.
pub fn heterodyne_condition(
    joint: &GaussianState,
    measured_mode: usize,
    outcome: (f64, f64),
) -> Result<GaussianState> {
    HeterodyneMap::new(joint, measured_mode)?.condition(outcome.0, outcome.1)
}

/// Root fidelity `‖√ρ_a √ρ_b‖₁` of two single-mode Gaussian states.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.num_modes() != 1 || b.num_modes() != 1 {
        return Err(Error::Unsupported(
            "closed-form fidelity is implemented for single-mode states only".into(),
        ));
    }
    let sum = a.cm() + b.cm();
    let det_sum = sum.determinant();
    let inv = sum
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular covariance sum".into()))?;
    let d = a.mean() - b.mean();
    let quad = (d.transpose() * inv * &d)[(0, 0)];
    let big_delta = det_sum / 4.0;
    let small_delta = ((a.cm().determinant() - 1.0) * (b.cm().determinant() - 1.0) / 4.0).max(0.0);
    let squared = (-0.5 * quad).exp() / ((big_delta + small_delta).sqrt() - small_delta.sqrt());
    Ok(squared.sqrt().clamp(0.0, 1.0))
}
