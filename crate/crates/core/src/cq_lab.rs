//! Small classical-quantum states and numerical checks of the trace-distance
//! and min-entropy inequalities behind the finite-size bound.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::fock::matrix_fidelity;
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::parallel;

/// Largest alphabet and side-system dimension accepted.
pub const MAX_DIM: usize = 8;
const STATE_TOL: f64 = 1e-12;
/// Slack below this counts as a violation; above it as rounding noise.
const VIOLATION_TOL: f64 = -1e-12;
/// Tolerance of the block-diagonal trace-distance identity.
pub const IDENTITY_TOL: f64 = 1e-10;

/// `Σ_x P(x) |x⟩⟨x| ⊗ ω(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    probs: Vec<f64>,
    side: Vec<CMatrix>,
    classical: bool,
}

impl CqState {
    pub fn new(probs: Vec<f64>, side: Vec<CMatrix>) -> Result<Self> {
        if probs.is_empty() || probs.len() > MAX_DIM || probs.len() != side.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} probabilities for {} side states (at most {MAX_DIM})",
                probs.len(),
                side.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > STATE_TOL {
            return domain("probabilities must be non-negative and sum to one");
        }
        let dim = side[0].nrows();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::ShapeMismatch(format!("side dimension {dim} outside 1..={MAX_DIM}")));
        }
        for w in &side {
            if w.nrows() != dim || w.ncols() != dim {
                return Err(Error::ShapeMismatch("side states must share one square shape".into()));
            }
            if (w - w.adjoint()).iter().any(|z| z.norm() > STATE_TOL) {
                return domain("side state is not Hermitian");
            }
            if (w.trace().re - 1.0).abs() > STATE_TOL {
                return domain("side state does not have unit trace");
            }
            if hermitian_eigenvalues(w)?.first().is_some_and(|&v| v < -STATE_TOL) {
                return domain("side state is not positive semidefinite");
            }
        }
        let classical = side.iter().all(|w| {
            (0..dim).all(|r| (0..dim).all(|c| r == c || w[(r, c)].norm() <= STATE_TOL))
        });
        Ok(Self { probs, side, classical })
    }

    /// State with classical side information given by the joint table `joint[x][e]`.
    pub fn from_joint(joint: &[Vec<f64>]) -> Result<Self> {
        let mut probs = Vec::with_capacity(joint.len());
        let mut side = Vec::with_capacity(joint.len());
        for row in joint {
            let px: f64 = row.iter().sum();
            probs.push(px);
            let dim = row.len();
            side.push(if px > 0.0 {
                CMatrix::from_fn(dim, dim, |r, c| if r == c { Complex64::new(row[r] / px, 0.0) } else { Complex64::new(0.0, 0.0) })
            } else {
                let mut w = CMatrix::zeros(dim, dim);
                w[(0, 0)] = Complex64::new(1.0, 0.0);
                w
            });
        }
        Self::new(probs, side)
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn side_dim(&self) -> usize {
        self.side[0].nrows()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn side_states(&self) -> &[CMatrix] {
        &self.side
    }

    /// All side states are diagonal in the computational basis.
    pub fn is_classical(&self) -> bool {
        self.classical
    }

    /// Block-diagonal matrix of the whole state.
    pub fn matrix(&self) -> CMatrix {
        let d = self.side_dim();
        let mut m = CMatrix::zeros(d * self.alphabet_size(), d * self.alphabet_size());
        for (x, (p, w)) in self.probs.iter().zip(&self.side).enumerate() {
            m.view_mut((x * d, x * d), (d, d)).copy_from(&w.scale(*p));
        }
        m
    }

    /// Projects the classical register onto `subset` and renormalizes.
    pub fn project(&self, subset: &[usize]) -> Result<ProjectionResult> {
        if subset.iter().any(|&x| x >= self.alphabet_size()) {
            return domain("subset contains a symbol outside the alphabet");
        }
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        subset.dedup();
        let p: f64 = subset.iter().map(|&x| self.probs[x]).sum();
        if !(p > 0.0) {
            return domain("projection has zero probability");
        }
        let probs = (0..self.alphabet_size())
            .map(|x| if subset.binary_search(&x).is_ok() { self.probs[x] / p } else { 0.0 })
            .collect();
        let projected = Self { probs, side: self.side.clone(), classical: self.classical };
        Ok(ProjectionResult { subset, p, projected })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub subset: Vec<usize>,
    pub p: f64,
    pub projected: CqState,
}

fn check_same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `½ Σ |λ_i(a - b)|`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(0.5 * hermitian_eigenvalues(&(a - b))?.iter().map(|v| v.abs()).sum::<f64>())
}

/// `√(1 - F²)` with the root fidelity `F = ‖√a √b‖₁`.
pub fn purified_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    let f = matrix_fidelity(a, b)?.min(1.0);
    Ok((1.0 - f * f).max(0.0).sqrt())
}

fn check_compatible(a: &CqState, b: &CqState) -> Result<()> {
    if a.alphabet_size() != b.alphabet_size() || a.side_dim() != b.side_dim() {
        return Err(Error::ShapeMismatch("CQ states differ in alphabet or side dimension".into()));
    }
    Ok(())
}

/// Trace distance of the full states and the sum of blockwise distances.
pub fn cq_trace_distance_identity(rho: &CqState, rho_star: &CqState) -> Result<(f64, f64)> {
    identity_sides(rho, rho_star, false)
}

fn identity_sides(rho: &CqState, rho_star: &CqState, corrupt: bool) -> Result<(f64, f64)> {
    check_compatible(rho, rho_star)?;
    let lhs = trace_distance(&rho.matrix(), &rho_star.matrix())?;
    let sign = if corrupt { -1.0 } else { 1.0 };
    let mut rhs = 0.0;
    for x in 0..rho.alphabet_size() {
        let a = rho.side[x].scale(rho.probs[x]);
        let b = rho_star.side[x].scale(sign * rho_star.probs[x]);
        rhs += trace_distance(&a, &b)?;
    }
    Ok((lhs, rhs))
}

/// `H_min(X|E) = -log2 Σ_e max_x P(x) ω(x)_ee` for diagonal side states.
pub fn min_entropy_classical(rho: &CqState) -> Result<f64> {
    if !rho.is_classical() {
        return Err(Error::Unsupported(
            "min-entropy with quantum side information needs an optimization over channels".into(),
        ));
    }
    let guess: f64 = (0..rho.side_dim())
        .map(|e| {
            (0..rho.alphabet_size())
                .map(|x| rho.probs[x] * rho.side[x][(e, e)].re)
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(-guess.log2())
}

/// Slacks of the projection inequalities; negative slack is a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCheck {
    /// `H_min(τ) - H_min(ρ) - log2 p`.
    pub min_entropy_slack: f64,
    /// `p ε²/2 - |p - p*|`, `None` when `D(ρ, ρ*) > p ε²/4`.
    pub probability_slack: Option<f64>,
    /// `ε²/2 - D(τ, τ*)`, `None` when `D(ρ, ρ*) > p ε²/4`.
    pub distance_slack: Option<f64>,
}

impl ProjectionCheck {
    pub fn hypothesis_holds(&self) -> bool {
        self.distance_slack.is_some()
    }
}

pub fn check_projection_lemmas(rho: &CqState, rho_star: &CqState, subset: &[usize], eps: f64) -> Result<ProjectionCheck> {
    check_compatible(rho, rho_star)?;
    if !(eps > 0.0) {
        return domain("eps must be positive");
    }
    let proj = rho.project(subset)?;
    let min_entropy_slack = min_entropy_classical(&proj.projected)? - min_entropy_classical(rho)? - proj.p.log2();
    let p = proj.p;
    let p_star: f64 = proj.subset.iter().map(|&x| rho_star.probs[x]).sum();
    let d = trace_distance(&rho.matrix(), &rho_star.matrix())?;
    let (probability_slack, distance_slack) = if d <= p * eps * eps / 4.0 && p_star > 0.0 {
        let tau_star = rho_star.project(&proj.subset)?.projected;
        let d_tau = trace_distance(&proj.projected.matrix(), &tau_star.matrix())?;
        (Some(p * eps * eps / 2.0 - (p - p_star).abs()), Some(eps * eps / 2.0 - d_tau))
    } else {
        (None, None)
    };
    Ok(ProjectionCheck { min_entropy_slack, probability_slack, distance_slack })
}

/// Uniformly distributed point of the probability simplex.
pub fn random_probabilities<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

/// Normalized square of a random Hermitian matrix with Gaussian entries.
pub fn random_density_matrix<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let mut h = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        h[(r, r)] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for c in r + 1..dim {
            let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            h[(r, c)] = z;
            h[(c, r)] = z.conj();
        }
    }
    let sq = &h * &h;
    let sq = (&sq + sq.adjoint()).scale(0.5);
    let t = sq.trace().re;
    sq.unscale(t)
}

fn random_diagonal_state<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let d = random_probabilities(rng, dim);
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, d.into_iter().map(|v| Complex64::new(v, 0.0))))
}

pub fn random_cq_state<R: Rng>(rng: &mut R, alphabet: usize, dim: usize, classical: bool) -> CqState {
    let probs = random_probabilities(rng, alphabet);
    let side = (0..alphabet)
        .map(|_| if classical { random_diagonal_state(rng, dim) } else { random_density_matrix(rng, dim) })
        .collect();
    CqState::new(probs, side).expect("random CQ state is valid")
}

/// `(1 - t) a + t b`.
pub fn mix(a: &CqState, b: &CqState, t: f64) -> Result<CqState> {
    check_compatible(a, b)?;
    let mut probs = Vec::with_capacity(a.alphabet_size());
    let mut side = Vec::with_capacity(a.alphabet_size());
    for x in 0..a.alphabet_size() {
        let block = a.side[x].scale((1.0 - t) * a.probs[x]) + b.side[x].scale(t * b.probs[x]);
        let px = block.trace().re;
        probs.push(px);
        side.push(if px > 0.0 { block.unscale(px) } else { a.side[x].clone() });
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    CqState::new(probs, side)
}

/// Counts for one inequality over a batch of random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaTally {
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Smallest slack seen; negative means the bound failed.
    pub worst_slack: f64,
}

impl LemmaTally {
    fn new() -> Self {
        Self { checked: 0, skipped: 0, violations: 0, worst_slack: f64::INFINITY }
    }

    fn record(&mut self, slack: Option<f64>) {
        match slack {
            None => self.skipped += 1,
            Some(s) => {
                self.checked += 1;
                self.worst_slack = self.worst_slack.min(s);
                if s < VIOLATION_TOL {
                    self.violations += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSuiteReport {
    pub instances: usize,
    pub seed: u64,
    /// Block-diagonal identity, slack `1e-10 - |lhs - rhs|`.
    pub identity: LemmaTally,
    /// `H_min(τ) ≥ H_min(ρ) + log2 p`.
    pub min_entropy: LemmaTally,
    /// `|p - p*| ≤ p ε²/2`.
    pub probability_shift: LemmaTally,
    /// `D(τ, τ*) ≤ ε²/2`.
    pub projected_distance: LemmaTally,
    /// `D ≤ P`, slack `P - D`.
    pub distance_lower: LemmaTally,
    /// `P ≤ √(2D)`, slack `√(2D) - P`.
    pub distance_upper: LemmaTally,
}

impl LemmaSuiteReport {
    pub fn violations(&self) -> usize {
        [
            self.identity,
            self.min_entropy,
            self.probability_shift,
            self.projected_distance,
            self.distance_lower,
            self.distance_upper,
        ]
        .iter()
        .map(|t| t.violations)
        .sum()
    }
}

/// Smoothing parameter used for the projected-state checks.
pub const SUITE_EPS: f64 = 0.3;

struct InstanceOutcome {
    identity: f64,
    min_entropy: f64,
    probability: Option<f64>,
    distance: Option<f64>,
    lower: f64,
    upper: f64,
}

fn run_instance(seed: u64, index: usize, corrupt: bool) -> Result<InstanceOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let alphabet = rng.random_range(2..=4);
    let dim = rng.random_range(2..=4);

    let a = random_cq_state(&mut rng, alphabet, dim, false);
    let b = random_cq_state(&mut rng, alphabet, dim, false);
    let (lhs, rhs) = identity_sides(&a, &b, corrupt)?;
    let d = trace_distance(&a.matrix(), &b.matrix())?;
    let pd = purified_distance(&a.matrix(), &b.matrix())?;

    let rho = random_cq_state(&mut rng, alphabet, dim, true);
    let sigma = random_cq_state(&mut rng, alphabet, dim, true);
    let mut subset: Vec<usize> = (0..alphabet).filter(|_| rng.random_bool(0.5)).collect();
    if subset.is_empty() {
        subset.push(rng.random_range(0..alphabet));
    }
    let p: f64 = subset.iter().map(|&x| rho.probs()[x]).sum();
    let gap = trace_distance(&rho.matrix(), &sigma.matrix())?;
    let budget = p * SUITE_EPS * SUITE_EPS / 4.0;
    let t = (rng.random::<f64>() * budget / gap.max(f64::MIN_POSITIVE)).min(1.0);
    let rho_star = mix(&rho, &sigma, t)?;
    let check = check_projection_lemmas(&rho, &rho_star, &subset, SUITE_EPS)?;

    Ok(InstanceOutcome {
        identity: IDENTITY_TOL - (lhs - rhs).abs(),
        min_entropy: check.min_entropy_slack,
        probability: check.probability_slack,
        distance: check.distance_slack,
        lower: pd - d,
        upper: (2.0 * d).sqrt() - pd,
    })
}

/// Runs every inequality on `instances` random instances. With `corrupt`
/// set, a sign in the blockwise identity is flipped so the harness can show
/// that it detects failures.
pub fn run_lemma_suite(instances: usize, seed: u64, corrupt: bool) -> Result<LemmaSuiteReport> {
    let outcomes = parallel::map_indexed(instances, |i| run_instance(seed, i, corrupt));
    let mut report = LemmaSuiteReport {
        instances,
        seed,
        identity: LemmaTally::new(),
        min_entropy: LemmaTally::new(),
        probability_shift: LemmaTally::new(),
        projected_distance: LemmaTally::new(),
        distance_lower: LemmaTally::new(),
        distance_upper: LemmaTally::new(),
    };
    for o in outcomes {
        let o = o?;
        report.identity.record(Some(o.identity));
        report.min_entropy.record(Some(o.min_entropy));
        report.probability_shift.record(o.probability);
        report.projected_distance.record(o.distance);
        report.distance_lower.record(Some(o.lower));
        report.distance_upper.record(Some(o.upper));
    }
    Ok(report)
}

/// Matrix with real entries promoted to complex; convenient for literals.
pub fn complex_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    DMatrix::from_row_slice(rows, cols, data).map(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(dim: usize, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        m
    }

    #[test]
    fn distances_of_trivial_pairs() {
        let a = ket(2, 0);
        let b = ket(2, 1);
        assert_abs_diff_eq!(trace_distance(&a, &a).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(purified_distance(&a, &a).unwrap(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(purified_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        assert!(trace_distance(&a, &ket(3, 0)).is_err());
    }

    #[test]
    fn two_point_identity_example() {
        let rho = CqState::new(vec![0.5, 0.5], vec![ket(2, 0), ket(2, 1)]).unwrap();
        let star = CqState::new(vec![0.5, 0.5], vec![ket(2, 0), ket(2, 0)]).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho.matrix(), &star.matrix()).unwrap(), 0.5, epsilon = 1e-14);
        let (lhs, rhs) = cq_trace_distance_identity(&rho, &star).unwrap();
        assert_abs_diff_eq!(lhs, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rhs, 0.5, epsilon = 1e-14);
        assert_eq!(cq_trace_distance_identity(&rho, &rho).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn classical_min_entropy_extremes() {
        let independent = CqState::from_joint(&vec![vec![0.125, 0.125]; 4]).unwrap();
        assert_abs_diff_eq!(min_entropy_classical(&independent).unwrap(), 2.0, epsilon = 1e-14);
        let correlated: Vec<Vec<f64>> = (0..4).map(|x| (0..4).map(|e| if x == e { 0.25 } else { 0.0 }).collect()).collect();
        assert_abs_diff_eq!(min_entropy_classical(&CqState::from_joint(&correlated).unwrap()).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn quantum_side_information_is_unsupported() {
        let plus = complex_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let rho = CqState::new(vec![0.5, 0.5], vec![ket(2, 0), plus]).unwrap();
        assert!(!rho.is_classical());
        assert!(matches!(min_entropy_classical(&rho), Err(Error::Unsupported(_))));
    }

    #[test]
    fn projection_equality_case() {
        let rho = CqState::from_joint(&vec![vec![0.25]; 4]).unwrap();
        let check = check_projection_lemmas(&rho, &rho, &[0, 1], 0.3).unwrap();
        assert_abs_diff_eq!(check.min_entropy_slack, 0.0, epsilon = 1e-14);
        let tau = rho.project(&[0, 1]).unwrap();
        assert_abs_diff_eq!(tau.p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(min_entropy_classical(&tau.projected).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hypothesis_violation_skips() {
        let rho = CqState::from_joint(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let far = CqState::from_joint(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let check = check_projection_lemmas(&rho, &far, &[0], 0.3).unwrap();
        assert!(!check.hypothesis_holds());
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(CqState::new(vec![0.6, 0.6], vec![ket(2, 0), ket(2, 1)]).is_err());
        assert!(CqState::new(vec![1.0], vec![complex_matrix(2, 2, &[1.5, 0.0, 0.0, -0.5])]).is_err());
        assert!(CqState::new(vec![1.0], vec![complex_matrix(2, 2, &[0.5, 0.1, 0.0, 0.5])]).is_err());
    }

    #[test]
    fn suite_is_deterministic_and_detects_corruption() {
        let a = run_lemma_suite(40, 11, false).unwrap();
        assert_eq!(a, run_lemma_suite(40, 11, false).unwrap());
        assert_eq!(a.violations(), 0);
        assert!(run_lemma_suite(40, 11, true).unwrap().identity.violations > 0);
        assert_eq!(run_lemma_suite(0, 11, false).unwrap().violations(), 0);
    }
}
