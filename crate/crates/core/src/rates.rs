//! Bob's decoded-symbol statistics, Eve's Holevo information on Bob's
//! symbol and the asymptotic reverse-reconciliation key rate.
//!
//! Bob's heterodyne outcome is written in polar form
//! `q + ip = β exp(i(2πl/N + θ))` with `θ ∈ [-π/N, π/N]`, so the sector
//! index `l` is his decoded symbol. Every integral over outcomes uses one
//! tensor Gauss–Legendre grid in `(β, θ)`; the Jacobian `β` is applied by the
//! integrators, never by [`outcome_density`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::fock::{von_neumann_entropy, FockDensityMatrix, FockKernel};
use crate::gaussian::{channel_output, make_signal_state, ChannelParams, HeterodyneMap, ProtocolParams};
use crate::linalg::{entropy_bits, symmetric_eigen, CMatrix};
use crate::parallel;
use crate::quadrature::{gauss_hermite_normal, gauss_legendre, Rule};

/// Allowed deviation of a transition-matrix row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-4;
/// Allowed deviation of a conditional Eve state's trace from one.
pub const EVE_TRACE_TOL: f64 = 1e-3;
/// Most negative Holevo value still attributed to numerical noise.
pub const HOLEVO_NEGATIVE_TOL: f64 = 1e-6;

/// Quadrature nodes that contribute less than this weight are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-18;
/// Columns per rank-K update block.
const GEMM_BLOCK: usize = 4096;

/// Resolution of the outcome grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub beta_nodes: usize,
    pub theta_nodes: usize,
    /// Radial cut-off in standard deviations beyond the farthest mean.
    pub sigma_margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { beta_nodes: 96, theta_nodes: 96, sigma_margin: 10.0 }
    }
}

/// Gauss–Legendre nodes on `[0, β_max] × [-π/N, π/N]`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    alphabet: usize,
    beta: Rule,
    theta: Rule,
    beta_max: f64,
}

impl QuadratureGrid {
    /// `β_max = √τ α + margin · √Ω`.
    pub fn new(params: &ProtocolParams, ch: &ChannelParams, spec: GridSpec) -> Result<Self> {
        if spec.beta_nodes < 2 || spec.theta_nodes < 2 {
            return domain("quadrature grid needs at least two nodes per axis");
        }
        if !(spec.sigma_margin > 0.0) {
            return domain("sigma margin must be positive");
        }
        let beta_max = ch.tau().sqrt() * params.alpha + spec.sigma_margin * ch.big_omega(params.nu_th).sqrt();
        let half = PI / params.n as f64;
        Ok(Self {
            alphabet: params.n,
            beta: gauss_legendre(spec.beta_nodes, 0.0, beta_max),
            theta: gauss_legendre(spec.theta_nodes, -half, half),
            beta_max,
        })
    }

    pub fn with_defaults(params: &ProtocolParams, ch: &ChannelParams) -> Result<Self> {
        Self::new(params, ch, GridSpec::default())
    }

    pub fn beta(&self) -> &Rule {
        &self.beta
    }

    pub fn theta(&self) -> &Rule {
        &self.theta
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn check(&self, params: &ProtocolParams) -> Result<()> {
        if self.alphabet != params.n {
            return domain(format!(
                "grid was built for N = {}, protocol has N = {}",
                self.alphabet, params.n
            ));
        }
        Ok(())
    }

    /// Outcome `(q, p)` and integration weight (Jacobian included) of node `(i, j)` in sector `l`.
    fn node(&self, l: usize, i: usize, j: usize) -> ((f64, f64), f64) {
        let beta = self.beta.nodes[i];
        let angle = 2.0 * PI * l as f64 / self.alphabet as f64 + self.theta.nodes[j];
        (
            (beta * angle.cos(), beta * angle.sin()),
            beta * self.beta.weights[i] * self.theta.weights[j],
        )
    }
}

/// Density of Bob's outcome in polar sector coordinates given Alice sent `k`,
/// without the radial Jacobian.
pub fn outcome_density(
    beta: f64,
    theta: f64,
    l: usize,
    k: usize,
    params: &ProtocolParams,
    ch: &ChannelParams,
) -> f64 {
    let angle = params.phase(l) + theta;
    density_at(beta * angle.cos(), beta * angle.sin(), k, params, ch)
}

fn density_at(q: f64, p: f64, k: usize, params: &ProtocolParams, ch: &ChannelParams) -> f64 {
    let omega = ch.big_omega(params.nu_th);
    let amp = ch.tau().sqrt() * params.alpha;
    let phase = params.phase(k);
    let dq = q - amp * phase.cos();
    let dp = p - amp * phase.sin();
    (-(dq * dq + dp * dp) / (2.0 * omega)).exp() / (2.0 * PI * omega)
}

/// `P(l|k)` with rows indexed by Alice's `k` and columns by Bob's `l`.
pub fn transition_matrix(
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    grid.check(params)?;
    let n = params.n;
    let mut p = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let mut acc = 0.0;
            for i in 0..grid.beta.len() {
                for j in 0..grid.theta.len() {
                    let ((q, pp), w) = grid.node(l, i, j);
                    acc += w * density_at(q, pp, k, params, ch);
                }
            }
            p[(k, l)] = acc;
        }
        let row: f64 = p.row(k).sum();
        if (row - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Resolution(format!(
                "row {k} of the transition matrix sums to {row}; refine the outcome grid"
            )));
        }
    }
    Ok(p)
}

/// Mutual information `I(k:l)` and residual entropy `H(k|l)` in bits for a
/// uniform prior on `k`.
pub fn mutual_information(p_lk: &DMatrix<f64>, n: usize) -> (f64, f64) {
    let prior = 1.0 / n as f64;
    let mut residual = 0.0;
    for l in 0..n {
        let p_l: f64 = (0..n).map(|k| prior * p_lk[(k, l)]).sum();
        if p_l <= 0.0 {
            continue;
        }
        let posterior: Vec<f64> = (0..n).map(|k| prior * p_lk[(k, l)] / p_l).collect();
        residual += p_l * entropy_bits(&posterior);
    }
    ((n as f64).log2() - residual, residual)
}

/// How the conditional states of Eve are assembled in the Fock basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveStateMethod {
    /// Every conditional Gaussian state is written as a Gauss–Hermite mixture
    /// of displaced pure Gaussian states (a single term when Alice sends
    /// coherent states); the weighted state vectors are accumulated with
    /// rank-K matrix products.
    PureDecomposition { mixture_order: usize },
    /// Full density-matrix conversion at every quadrature node.
    DirectConversion,
}

impl Default for EveStateMethod {
    fn default() -> Self {
        Self::PureDecomposition { mixture_order: 4 }
    }
}

/// Eve's conditional Gaussian states for every `(k, outcome)`.
struct EveModel {
    kernel: FockKernel,
    pure_kernel: Option<FockKernel>,
    maps: Vec<HeterodyneMap>,
    /// Displacements `(weight, shift)` realizing the mixed part of the state.
    mixture: Vec<(f64, [f64; 4])>,
}

impl EveModel {
    fn new(params: &ProtocolParams, ch: &ChannelParams, method: EveStateMethod) -> Result<Self> {
        let maps = (0..params.n)
            .map(|k| {
                let joint = channel_output(&make_signal_state(k, params)?, ch)?;
                HeterodyneMap::new(&joint, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        let cm = maps[0].conditional_cm().clone();
        let kernel = FockKernel::new(&cm)?;
        let (pure_kernel, mixture) = match method {
            EveStateMethod::DirectConversion => (None, Vec::new()),
            EveStateMethod::PureDecomposition { mixture_order } => {
                if mixture_order == 0 {
                    return domain("mixture order must be at least 1");
                }
                // coherent-state preparation leaves Eve with pure conditional states
                let coherent = params.with_nu_th(0.0)?;
                let joint = channel_output(&make_signal_state(0, &coherent)?, ch)?;
                let pure_cm = HeterodyneMap::new(&joint, 0)?.conditional_cm().clone();
                let pure_kernel = FockKernel::new(&pure_cm)?;
                if !pure_kernel.is_pure() {
                    return Err(Error::Domain("reference conditional state is not pure".into()));
                }
                let mixture = displacement_mixture(&(&cm - &pure_cm), mixture_order)?;
                (Some(pure_kernel), mixture)
            }
        };
        Ok(Self { kernel, pure_kernel, maps, mixture })
    }

    fn mean(&self, k: usize, q: f64, p: f64) -> [f64; 4] {
        let m = self.maps[k].conditional_mean(q, p);
        [m[0], m[1], m[2], m[3]]
    }
}

/// Gauss–Hermite points for a zero-mean Gaussian displacement with covariance `y`.
fn displacement_mixture(y: &DMatrix<f64>, order: usize) -> Result<Vec<(f64, [f64; 4])>> {
    let y = (y + y.transpose()) * 0.5;
    let eig = symmetric_eigen(&y)?;
    let scale = y.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&v| v < -1e-10 * scale) {
        return domain("conditional state is not a mixture of the pure reference states");
    }
    let directions: Vec<(f64, DVector<f64>)> = (0..4)
        .filter(|&i| eig.eigenvalues[i] > 1e-13 * scale)
        .map(|i| (eig.eigenvalues[i].sqrt(), eig.eigenvectors.column(i).into_owned()))
        .collect();
    let rule = gauss_hermite_normal(order);
    let mut points = vec![(1.0, [0.0; 4])];
    for (sd, dir) in &directions {
        let mut next = Vec::with_capacity(points.len() * rule.len());
        for (w, shift) in &points {
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let mut s = *shift;
                for (c, v) in s.iter_mut().enumerate() {
                    *v += sd * t * dir[c];
                }
                next.push((w * wt, s));
            }
        }
        points = next;
    }
    Ok(points)
}

/// One weighted node of the outcome integral for sector `l`.
struct WeightedNode {
    k: usize,
    q: f64,
    p: f64,
    weight: f64,
}

fn sector_nodes(
    l: usize,
    p_l: f64,
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
) -> Vec<WeightedNode> {
    let prior = 1.0 / params.n as f64;
    let mut nodes = Vec::new();
    for k in 0..params.n {
        for i in 0..grid.beta.len() {
            for j in 0..grid.theta.len() {
                let ((q, p), w) = grid.node(l, i, j);
                let weight = w * density_at(q, p, k, params, ch) * prior / p_l;
                if weight > NEGLIGIBLE_WEIGHT {
                    nodes.push(WeightedNode { k, q, p, weight });
                }
            }
        }
    }
    nodes
}

fn assemble_pure(model: &EveModel, kernel: &FockKernel, nodes: &[WeightedNode], cutoff: usize) -> CMatrix {
    let d = cutoff * cutoff;
    let terms = nodes.len() * model.mixture.len();
    let blocks = terms.div_ceil(GEMM_BLOCK).max(1);
    let partials = parallel::map_indexed(blocks, |b| {
        let start = b * GEMM_BLOCK;
        let end = ((b + 1) * GEMM_BLOCK).min(terms);
        let mut x = DMatrix::<f64>::zeros(2 * d, end - start);
        let mut psi = vec![Complex64::new(0.0, 0.0); d];
        for (col, t) in (start..end).enumerate() {
            let node = &nodes[t / model.mixture.len()];
            let (mw, shift) = &model.mixture[t % model.mixture.len()];
            let mut mean = model.mean(node.k, node.q, node.p);
            for (m, s) in mean.iter_mut().zip(shift) {
                *m += s;
            }
            kernel.amplitudes_into(&mean, cutoff, &mut psi);
            let s = (node.weight * mw).sqrt();
            for (r, a) in psi.iter().enumerate() {
                x[(r, col)] = s * a.re;
                x[(r + d, col)] = s * a.im;
            }
        }
        &x * x.transpose()
    });
    let mut g = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for part in partials {
        g += part;
    }
    CMatrix::from_fn(d, d, |r, c| {
        Complex64::new(g[(r, c)] + g[(r + d, c + d)], g[(r + d, c)] - g[(r, c + d)])
    })
}

fn assemble_direct(model: &EveModel, nodes: &[WeightedNode], cutoff: usize) -> CMatrix {
    let d = cutoff * cutoff;
    let blocks = nodes.len().div_ceil(256).max(1);
    let partials = parallel::map_indexed(blocks, |b| {
        let mut acc = CMatrix::zeros(d, d);
        for node in &nodes[b * 256..((b + 1) * 256).min(nodes.len())] {
            let mean = model.mean(node.k, node.q, node.p);
            acc += model.kernel.density(&mean, cutoff).scale(node.weight);
        }
        acc
    });
    let mut total = CMatrix::zeros(d, d);
    for part in partials {
        total += part;
    }
    total
}

fn conditional_state(
    model: &EveModel,
    l: usize,
    p_l: f64,
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
) -> Result<FockDensityMatrix> {
    let nodes = sector_nodes(l, p_l, params, ch, grid);
    let raw = match &model.pure_kernel {
        Some(kernel) => assemble_pure(model, kernel, &nodes, cutoff),
        None => assemble_direct(model, &nodes, cutoff),
    };
    let trace = raw.trace().re;
    if (trace - 1.0).abs() > EVE_TRACE_TOL {
        return Err(Error::Resolution(format!(
            "Eve's conditional state for l = {l} has trace {trace:.6}; raise the Fock cutoff or refine the grid"
        )));
    }
    FockDensityMatrix::from_unnormalized(2, cutoff, raw)
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return domain(format!("cutoff must be at least 2, got {cutoff}"));
    }
    Ok(())
}

/// Eve's state `ρ_{E|l}` given Bob decoded `l`.
pub fn eve_conditional_state(
    l: usize,
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
) -> Result<FockDensityMatrix> {
    eve_conditional_state_with(l, params, ch, grid, cutoff, EveStateMethod::default())
}

pub fn eve_conditional_state_with(
    l: usize,
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
    method: EveStateMethod,
) -> Result<FockDensityMatrix> {
    if l >= params.n {
        return domain(format!("symbol {l} out of range"));
    }
    check_cutoff(cutoff)?;
    let p_lk = transition_matrix(params, ch, grid)?;
    let p_l = p_lk.column(l).sum() / params.n as f64;
    let model = EveModel::new(params, ch, method)?;
    conditional_state(&model, l, p_l, params, ch, grid, cutoff)
}

/// Everything computed on the way to the asymptotic key rate.
#[derive(Debug, Clone)]
pub struct RateBreakdown {
    /// `I(k:l)` in bits.
    pub mi: f64,
    /// `H(k|l)` in bits.
    pub residual_entropy: f64,
    /// `χ(E:l)` in bits, clamped at zero.
    pub holevo: f64,
    /// `ξ I(k:l) - χ(E:l)`, not clamped.
    pub rate: f64,
    pub p_lk: DMatrix<f64>,
    pub p_l: DVector<f64>,
    /// Variance of Bob's heterodyne quadratures.
    pub omega_big: f64,
    /// `S(ρ_E)` in bits.
    pub eve_entropy: f64,
    /// `S(ρ_{E|l})` for every `l`.
    pub conditional_entropies: Vec<f64>,
    /// Largest trace deficit among the conditional Eve states.
    pub max_trace_deficit: f64,
}

/// Holevo information `χ(E:l)` in bits.
pub fn holevo_bound(
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
) -> Result<f64> {
    Ok(asymptotic_rate(params, ch, grid, cutoff)?.holevo)
}

/// Asymptotic reverse-reconciliation rate `R = ξ I(k:l) - χ(E:l)`.
pub fn asymptotic_rate(
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
) -> Result<RateBreakdown> {
    asymptotic_rate_with(params, ch, grid, cutoff, EveStateMethod::default())
}

pub fn asymptotic_rate_with(
    params: &ProtocolParams,
    ch: &ChannelParams,
    grid: &QuadratureGrid,
    cutoff: usize,
    method: EveStateMethod,
) -> Result<RateBreakdown> {
    check_cutoff(cutoff)?;
    let n = params.n;
    let p_lk = transition_matrix(params, ch, grid)?;
    let (mi, residual_entropy) = mutual_information(&p_lk, n);
    let p_l = DVector::from_fn(n, |l, _| p_lk.column(l).sum() / n as f64);
    let model = EveModel::new(params, ch, method)?;
    // Rotating Alice's constellation and Bob's sectors by 2π/N rotates Eve's
    // channel mode with it and her idler mode against it.
    let first = conditional_state(&model, 0, p_l[0], params, ch, grid, cutoff)?;
    let mut states = Vec::with_capacity(n);
    for l in 1..n {
        let phi = params.phase(l);
        states.push(first.phase_rotated(&[phi, -phi])?);
    }
    states.insert(0, first);
    let d = cutoff * cutoff;
    let mut average = CMatrix::zeros(d, d);
    for (l, s) in states.iter().enumerate() {
        average += s.matrix().scale(p_l[l]);
    }
    let average = FockDensityMatrix::from_unnormalized(2, cutoff, average)?;
    let eve_entropy = von_neumann_entropy(&average);
    let conditional_entropies: Vec<f64> = states.iter().map(von_neumann_entropy).collect();
    let chi = eve_entropy
        - conditional_entropies
            .iter()
            .zip(p_l.iter())
            .map(|(s, p)| p * s)
            .sum::<f64>();
    if chi < -HOLEVO_NEGATIVE_TOL {
        return Err(Error::Resolution(format!("Holevo quantity {chi:.3e} is negative")));
    }
    let holevo = chi.max(0.0);
    Ok(RateBreakdown {
        mi,
        residual_entropy,
        holevo,
        rate: params.xi * mi - holevo,
        p_lk,
        p_l,
        omega_big: ch.big_omega(params.nu_th),
        eve_entropy,
        conditional_entropies,
        max_trace_deficit: states.iter().map(|s| s.trace_deficit()).fold(0.0, f64::max),
    })
}
