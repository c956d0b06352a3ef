use std::f64::consts::PI;

use cvqkd_core::gaussian::{make_tmsv, ChannelParams, ProtocolParams};
use cvqkd_core::rates::{
    asymptotic_rate, asymptotic_rate_with, eve_conditional_state, mutual_information, transition_matrix, EveStateMethod,
    GridSpec, QuadratureGrid,
};
use cvqkd_core::{gaussian_to_fock, Error};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn binary_entropy(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn shannon(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().filter(|&v| v > 1e-300).map(|v| -v * v.log2()).sum()
}

/// Probability that a 2D Gaussian with mean at polar `(d, φ0)` and per-axis
/// variance `omega` falls in the angular sector `[a, b]`, from the closed-form
/// angular marginal and a fine composite Simpson rule.
fn sector_probability(d: f64, phi0: f64, omega: f64, a: f64, b: f64) -> f64 {
    let density = |angle: f64| {
        let t = d * (angle - phi0).cos() / omega.sqrt();
        let e = (-d * d / (2.0 * omega)).exp();
        (e + t * (2.0 * PI).sqrt() * phi(t) * (-(d * d) / (2.0 * omega) + t * t / 2.0).exp()) / (2.0 * PI)
    };
    let n = 20_000;
    let h = (b - a) / n as f64;
    let mut acc = density(a) + density(b);
    for i in 1..n {
        acc += density(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn oracle_transition(params: &ProtocolParams, ch: &ChannelParams) -> DMatrix<f64> {
    let n = params.n;
    let omega = ch.big_omega(params.nu_th);
    let d = ch.tau().sqrt() * params.alpha;
    let half = PI / n as f64;
    DMatrix::from_fn(n, n, |k, l| {
        let c = 2.0 * PI * l as f64 / n as f64;
        sector_probability(d, 2.0 * PI * k as f64 / n as f64, omega, c - half, c + half)
    })
}

/// Von Neumann entropy of `Σ_k w_k |ψ_k⟩⟨ψ_k|` from the Gram matrix of the weighted vectors.
fn gram_entropy(weights: &[f64], overlap: impl Fn(usize, usize) -> f64) -> f64 {
    let n = weights.len();
    let g = DMatrix::from_fn(n, n, |i, j| (weights[i] * weights[j]).sqrt() * overlap(i, j));
    shannon(SymmetricEigen::new(g).eigenvalues.iter().copied())
}

/// Holevo information for a pure-loss channel with coherent signals, where
/// Eve's mode holds `|-√(1-τ) α_k⟩` independently of Bob's outcome.
fn pure_loss_holevo(params: &ProtocolParams, ch: &ChannelParams, p_lk: &DMatrix<f64>) -> f64 {
    let n = params.n;
    let amp = (1.0 - ch.tau()).sqrt() * params.alpha / 2.0;
    // ⟨β_i|β_j⟩ = exp(-|β_i|²/2 - |β_j|²/2 + β_i* β_j)
    let overlap = |i: usize, j: usize| -> (f64, f64) {
        let (ai, aj) = (params.phase(i), params.phase(j));
        let (xi, yi, xj, yj) = (amp * ai.cos(), amp * ai.sin(), amp * aj.cos(), amp * aj.sin());
        let mag = (-amp * amp + xi * xj + yi * yj).exp();
        let arg = xi * yj - yi * xj;
        (mag * arg.cos(), mag * arg.sin())
    };
    // entropy of Σ_k w_k |β_k⟩⟨β_k| via the real form [[A, -B], [B, A]] of its
    // Gram matrix A + iB, which repeats every eigenvalue twice
    let entropy = |w: &[f64]| {
        let g = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (re, im) = overlap(r % n, c % n);
            let s = (w[r % n] * w[c % n]).sqrt();
            match (r < n, c < n) {
                (true, false) => -s * im,
                (false, true) => s * im,
                _ => s * re,
            }
        });
        0.5 * shannon(SymmetricEigen::new(g).eigenvalues.iter().copied())
    };
    let mut chi = entropy(&vec![1.0 / n as f64; n]);
    for l in 0..n {
        let p_l: f64 = (0..n).map(|k| p_lk[(k, l)]).sum::<f64>() / n as f64;
        let post: Vec<f64> = (0..n).map(|k| p_lk[(k, l)] / n as f64 / p_l).collect();
        chi -= p_l * entropy(&post);
    }
    chi
}

#[test]
fn lossless_binary_channel() {
    let params = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
    let ch = ChannelParams::new(1.0, 1.0).unwrap();
    let start = std::time::Instant::now();
    let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
    let r = asymptotic_rate(&params, &ch, &grid, 10).unwrap();
    let p = phi(2f64.sqrt());
    assert!((p - 0.9213504).abs() < 1e-7);
    assert!((r.p_lk[(0, 0)] - p).abs() < 1e-6, "{}", r.p_lk[(0, 0)]);
    assert!((r.p_lk[(1, 1)] - p).abs() < 1e-6);
    assert!((r.mi - 0.6026).abs() < 1e-3, "{}", r.mi);
    assert!((r.mi - (1.0 - binary_entropy(p))).abs() < 1e-6);
    assert!(r.holevo.abs() < 1e-6, "{}", r.holevo);
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn lossless_channel_leaves_eve_with_her_tmsv() {
    let params = ProtocolParams::new(3, 1.5, 0.2, 1.0).unwrap();
    let ch = ChannelParams::new(1.0, 1.5).unwrap();
    let grid = QuadratureGrid::new(&params, &ch, GridSpec { beta_nodes: 32, theta_nodes: 24, sigma_margin: 10.0 }).unwrap();
    let tmsv = gaussian_to_fock(&make_tmsv(1.5).unwrap(), 10).unwrap();
    for l in 0..3 {
        let rho = eve_conditional_state(l, &params, &ch, &grid, 10).unwrap();
        let err = (rho.matrix() - tmsv.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "l = {l}: {err:e}");
    }
}

#[test]
fn transition_matrix_matches_angular_marginal() {
    for (n, alpha, nu_th, db, eps) in [(2, 2.0, 0.0, 3.0, 0.01), (3, 2.0, 0.0, 1.0, 0.01), (4, 1.2, 0.3, 5.0, 0.05)] {
        let params = ProtocolParams::new(n, alpha, nu_th, 1.0).unwrap();
        let ch = ChannelParams::from_attenuation_db(db, eps).unwrap();
        let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
        let p = transition_matrix(&params, &ch, &grid).unwrap();
        let oracle = oracle_transition(&params, &ch);
        let err = (&p - &oracle).amax();
        assert!(err < 1e-7, "N = {n}: {err:e}");
    }
}

#[test]
fn pure_loss_holevo_matches_gram_oracle() {
    for (n, db) in [(2, 1.0), (2, 5.0), (3, 2.0)] {
        let params = ProtocolParams::new(n, 2.0, 0.0, 1.0).unwrap();
        let ch = ChannelParams::from_attenuation_db(db, 0.0).unwrap();
        let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
        let r = asymptotic_rate(&params, &ch, &grid, 14).unwrap();
        let oracle = pure_loss_holevo(&params, &ch, &oracle_transition(&params, &ch));
        assert!((r.holevo - oracle).abs() < 1e-6, "N = {n}, {db} dB: {} vs {oracle}", r.holevo);
    }
}

#[test]
fn binary_pure_loss_closed_form() {
    let params = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
    let ch = ChannelParams::from_attenuation_db(3.0, 0.0).unwrap();
    let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
    let r = asymptotic_rate(&params, &ch, &grid, 14).unwrap();
    let p = phi((ch.tau() / 2.0).sqrt() * params.alpha);
    let s = (-(1.0 - ch.tau()) * params.alpha * params.alpha / 2.0).exp();
    let two_state = |w: f64| gram_entropy(&[w, 1.0 - w], |i, j| if i == j { 1.0 } else { s });
    let chi = two_state(0.5) - two_state(p);
    assert!((r.holevo - chi).abs() < 1e-6, "{} vs {chi}", r.holevo);
    assert!((r.mi - (1.0 - binary_entropy(p))).abs() < 1e-6);
}

#[test]
fn rates_fall_with_attenuation() {
    let params = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
    let mut last_mi = f64::INFINITY;
    let mut last_rate = f64::INFINITY;
    for db in [0.5, 2.0, 4.0, 6.0, 8.0] {
        let ch = ChannelParams::from_attenuation_db(db, 0.01).unwrap();
        let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
        let r = asymptotic_rate(&params, &ch, &grid, 10).unwrap();
        assert!(r.mi < last_mi && r.rate < last_rate, "{db} dB");
        last_mi = r.mi;
        last_rate = r.rate;
    }
}

#[test]
fn thermal_preparation_methods_agree() {
    let params = ProtocolParams::new(2, 2.0, 0.1, 1.0).unwrap();
    let ch = ChannelParams::from_attenuation_db(3.0, 0.01).unwrap();
    let grid = QuadratureGrid::new(&params, &ch, GridSpec { beta_nodes: 32, theta_nodes: 24, sigma_margin: 10.0 }).unwrap();
    let fast = asymptotic_rate(&params, &ch, &grid, 8).unwrap();
    let direct = asymptotic_rate_with(&params, &ch, &grid, 8, EveStateMethod::DirectConversion).unwrap();
    assert!((fast.holevo - direct.holevo).abs() < 1e-6, "{} vs {}", fast.holevo, direct.holevo);
}

#[test]
fn invalid_requests_are_rejected() {
    let params = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
    let other = ProtocolParams::new(3, 2.0, 0.0, 1.0).unwrap();
    let ch = ChannelParams::from_attenuation_db(3.0, 0.01).unwrap();
    let grid = QuadratureGrid::with_defaults(&params, &ch).unwrap();
    assert!(matches!(asymptotic_rate(&params, &ch, &grid, 1), Err(Error::Domain(_))));
    assert!(matches!(eve_conditional_state(2, &params, &ch, &grid, 5), Err(Error::Domain(_))));
    assert!(matches!(transition_matrix(&other, &ch, &grid), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rate_invariants(n in 2usize..5, alpha in 0.5..2.0f64, nu_th in 0.0..0.3f64, db in 0.5..10.0f64, eps in 0.0..0.05f64) {
        let params = ProtocolParams::new(n, alpha, nu_th, 0.95).unwrap();
        let ch = ChannelParams::from_attenuation_db(db, eps).unwrap();
        let grid = QuadratureGrid::new(&params, &ch, GridSpec { beta_nodes: 40, theta_nodes: 24, sigma_margin: 10.0 }).unwrap();
        let r = asymptotic_rate(&params, &ch, &grid, 10).unwrap();
        for k in 0..n {
            prop_assert!((r.p_lk.row(k).sum() - 1.0).abs() < 1e-6);
        }
        prop_assert!((r.p_l.sum() - 1.0).abs() < 1e-6);
        let (mi, h) = mutual_information(&r.p_lk, n);
        prop_assert!(mi >= -1e-12 && mi <= (n as f64).log2() + 1e-12);
        prop_assert!((mi + h - (n as f64).log2()).abs() < 1e-12);
        prop_assert!(r.holevo >= 0.0 && r.holevo <= r.eve_entropy + 1e-9);
        prop_assert!(r.rate <= 0.95 * r.mi + 1e-12);
    }
}
