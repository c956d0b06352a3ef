//! Gauss–Legendre and Gauss–Hermite rules.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `n` nodes on `[a, b]`.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi initial
/// guess; weights are `2 / ((1 - x^2) P_n'(x)^2)` rescaled to the interval.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule for the standard normal weight: `∫ N(t; 0, 1) f(t) dt ≈ Σ w_i f(t_i)`.
///
/// Built with the Golub–Welsch eigenvalue method on the probabilists'
/// Hermite Jacobi matrix, so the weights sum to one.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    if n == 1 {
        return Rule { nodes: vec![0.0], weights: vec![1.0] };
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let rule = gauss_legendre(5, -1.0, 2.0);
        // degree 9 is the highest exactly integrated degree for 5 nodes
        let exact = (2f64.powi(10) - 1.0) / 10.0;
        assert!((rule.integrate(|x| x.powi(9)) - exact).abs() < 1e-11);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn legendre_many_nodes_integrates_gaussian() {
        let rule = gauss_legendre(128, 0.0, 12.0);
        let v = rule.integrate(|x| (-0.5 * x * x).exp());
        assert!((v - (PI / 2.0).sqrt()).abs() < 1e-13);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 12.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        let rule = gauss_hermite_normal(6);
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!(rule.integrate(|t| t).abs() < 1e-13);
        assert!((rule.integrate(|t| t * t) - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|t| t.powi(4)) - 3.0).abs() < 1e-11);
        assert!((rule.integrate(|t| t.powi(10)) - 945.0).abs() < 1e-8);
    }
}
