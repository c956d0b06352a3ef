use cvqkd_core::cq_lab::{
    check_projection_lemmas, cq_trace_distance_identity, min_entropy_classical, mix, purified_distance,
    random_cq_state, random_density_matrix, run_lemma_suite, trace_distance, CqState,
};
use cvqkd_core::linalg::CMatrix;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Guessing probability by enumerating every deterministic guess `e -> x`.
fn brute_force_guessing(rho: &CqState) -> f64 {
    let (nx, ne) = (rho.alphabet_size(), rho.side_dim());
    let mut best = 0.0f64;
    for code in 0..nx.pow(ne as u32) {
        let mut c = code;
        let mut total = 0.0;
        for e in 0..ne {
            let x = c % nx;
            c /= nx;
            total += rho.probs()[x] * rho.side_states()[x][(e, e)].re;
        }
        best = best.max(total);
    }
    best
}

/// `max_{x,e} P(x) ω_x(e) / σ(e)` for a candidate `σ`; `2^{-H_min}` is the
/// smallest such value over all states `σ`.
fn operator_bound(rho: &CqState, sigma: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..rho.alphabet_size() {
        for (e, s) in sigma.iter().enumerate() {
            worst = worst.max(rho.probs()[x] * rho.side_states()[x][(e, e)].re / s);
        }
    }
    worst
}

fn pure(v: &[Complex64]) -> CMatrix {
    let v = DVector::from_column_slice(v);
    let v = v.unscale(v.norm());
    &v * v.adjoint()
}

#[test]
fn lemma_suite_thousand_instances() {
    let start = Instant::now();
    let report = run_lemma_suite(1000, 2024, false).unwrap();
    assert_eq!(report.violations(), 0, "{report:#?}");
    assert_eq!(report.identity.checked, 1000);
    assert!(report.identity.worst_slack > 0.0);
    assert_eq!(report.probability_shift.checked, 1000);
    assert_eq!(report.distance_lower.checked, 1000);
    assert!(start.elapsed().as_secs() < 120);
    assert_eq!(run_lemma_suite(1000, 2024, false).unwrap(), report);
}

#[test]
fn corrupted_suite_reports_violations() {
    let report = run_lemma_suite(50, 7, true).unwrap();
    assert!(report.identity.violations > 0);
    assert_eq!(report.violations(), report.identity.violations);
}

#[test]
fn empty_suite_passes() {
    assert_eq!(run_lemma_suite(0, 1, false).unwrap().violations(), 0);
}

#[test]
fn pure_state_distances() {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let a = pure(&[one, 0.5 * i, 0.2 * one]);
    let b = pure(&[0.3 * one, one, -i]);
    let va = DVector::from_column_slice(&[one, 0.5 * i, 0.2 * one]).normalize();
    let vb = DVector::from_column_slice(&[0.3 * one, one, -i]).normalize();
    let overlap = va.dotc(&vb).norm_sqr();
    let expected = (1.0 - overlap).sqrt();
    assert!((trace_distance(&a, &b).unwrap() - expected).abs() < 1e-12);
    assert!((purified_distance(&a, &b).unwrap() - expected).abs() < 1e-7);
}

#[test]
fn commuting_states_reduce_to_classical_distances() {
    let p = [0.5f64, 0.3, 0.2];
    let q = [0.1f64, 0.6, 0.3];
    let diag = |v: &[f64]| CMatrix::from_diagonal(&DVector::from_iterator(3, v.iter().map(|&x| Complex64::new(x, 0.0))));
    let tv = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let bc: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
    assert!((trace_distance(&diag(&p), &diag(&q)).unwrap() - tv).abs() < 1e-14);
    assert!((purified_distance(&diag(&p), &diag(&q)).unwrap() - (1.0 - bc * bc).sqrt()).abs() < 1e-7);
}

#[test]
fn quantum_side_information_is_unsupported() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_cq_state(&mut rng, 2, 3, false);
    assert!(min_entropy_classical(&rho).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_entropy_matches_brute_force(seed in 0u64..10_000, nx in 2usize..5, ne in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_cq_state(&mut rng, nx, ne, true);
        let h = min_entropy_classical(&rho).unwrap();
        let guess = brute_force_guessing(&rho);
        prop_assert!((h + guess.log2()).abs() < 1e-12);
        prop_assert!(h >= -1e-12 && h <= (nx as f64).log2() + 1e-12);
        // every candidate σ gives an upper bound on 2^{-H_min}, and the optimal one attains it
        for _ in 0..20 {
            let sigma = cvqkd_core::cq_lab::random_probabilities(&mut rng, ne);
            prop_assert!(operator_bound(&rho, &sigma) >= guess * (1.0 - 1e-12));
        }
        let best: Vec<f64> = (0..ne)
            .map(|e| (0..nx).map(|x| rho.probs()[x] * rho.side_states()[x][(e, e)].re).fold(0.0, f64::max) / guess)
            .collect();
        if best.iter().all(|&s| s > 0.0) {
            prop_assert!((operator_bound(&rho, &best) - guess).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_sandwich(seed in 0u64..10_000, dim in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density_matrix(&mut rng, dim);
        let b = random_density_matrix(&mut rng, dim);
        let d = trace_distance(&a, &b).unwrap();
        let p = purified_distance(&a, &b).unwrap();
        prop_assert!(d <= p + 1e-9);
        prop_assert!(p <= (2.0 * d).sqrt() + 1e-9);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        prop_assert!((d - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cq_distance_is_blockwise(seed in 0u64..10_000, nx in 2usize..5, ne in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cq_state(&mut rng, nx, ne, false);
        let b = random_cq_state(&mut rng, nx, ne, false);
        let (lhs, rhs) = cq_trace_distance_identity(&a, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn projection_lemmas_hold_near_rho(seed in 0u64..10_000, nx in 2usize..5, ne in 1usize..5, frac in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_cq_state(&mut rng, nx, ne, true);
        let sigma = random_cq_state(&mut rng, nx, ne, true);
        let subset: Vec<usize> = (0..nx).step_by(2).collect();
        let eps = 0.4;
        let p: f64 = subset.iter().map(|&x| rho.probs()[x]).sum();
        let gap = trace_distance(&rho.matrix(), &sigma.matrix()).unwrap();
        let t = (frac * p * eps * eps / 4.0 / gap.max(1e-300)).min(1.0);
        let rho_star = mix(&rho, &sigma, t).unwrap();
        let check = check_projection_lemmas(&rho, &rho_star, &subset, eps).unwrap();
        prop_assert!(check.min_entropy_slack >= -1e-12);
        prop_assert!(check.hypothesis_holds());
        prop_assert!(check.probability_slack.unwrap() >= -1e-12);
        prop_assert!(check.distance_slack.unwrap() >= -1e-12);
    }
}
