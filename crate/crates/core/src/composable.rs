//! Finite-size composable key rate under collective attacks.

use crate::error::{domain, Result};

/// Base of the logarithm inside the square root of `Δ_AEP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AepLog {
    #[default]
    Base2,
    Natural,
}

/// Security parameters and block sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub eps_s: f64,
    pub eps_h: f64,
    pub eps_pe: f64,
    pub eps_cor: f64,
    /// Probability that error correction succeeds.
    pub p: f64,
    /// Fraction of signals sacrificed for parameter estimation.
    pub r: f64,
    /// Total number of signals `M`.
    pub m_total: u64,
    /// When set, the correctness error is accounted for inside `ξ` and not added to `ε_tot`.
    pub cor_absorbed_in_xi: bool,
    pub aep_log: AepLog,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self {
            eps_s: 1e-10,
            eps_h: 1e-10,
            eps_pe: 1e-10,
            eps_cor: 1e-10,
            p: 0.9,
            r: 0.01,
            m_total: 1_000_000_000,
            cor_absorbed_in_xi: true,
            aep_log: AepLog::Base2,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_s", self.eps_s), ("eps_h", self.eps_h), ("eps_pe", self.eps_pe), ("eps_cor", self.eps_cor)] {
            if !(v > 0.0 && v < 1.0) {
                return domain(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return domain(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return domain(format!("r must lie in (0, 1), got {}", self.r));
        }
        if self.key_length() == 0 {
            return domain(format!("no signals left for the key with M = {} and r = {}", self.m_total, self.r));
        }
        Ok(())
    }

    /// Number of signals used for parameter estimation, `m = round(rM)`.
    pub fn pe_samples(&self) -> u64 {
        ((self.r * self.m_total as f64).round() as u64).min(self.m_total)
    }

    /// Number of signals left for the key, `n = M - m`.
    pub fn key_length(&self) -> u64 {
        self.m_total - self.pe_samples()
    }

    pub fn with_m_total(self, m_total: u64) -> Self {
        Self { m_total, ..self }
    }
}

/// `Δ_AEP(ε, N) = 4 log2(2√N + 1) √(log2(2/ε²))`.
pub fn delta_aep(eps: f64, cardinality: usize) -> f64 {
    delta_aep_with(eps, cardinality, AepLog::Base2)
}

pub fn delta_aep_with(eps: f64, cardinality: usize, log: AepLog) -> f64 {
    let inner = 2.0 / (eps * eps);
    let inner = match log {
        AepLog::Base2 => inner.log2(),
        AepLog::Natural => inner.ln(),
    };
    4.0 * (2.0 * (cardinality as f64).sqrt() + 1.0).log2() * inner.sqrt()
}

/// `log2(p(1 - ε_s²/2)) + 2 log2(√2 ε_h)`.
fn constant_term(sec: &SecurityParams) -> f64 {
    (sec.p * (1.0 - sec.eps_s * sec.eps_s / 2.0)).log2() + 2.0 * (std::f64::consts::SQRT_2 * sec.eps_h).log2()
}

fn aep_term(sec: &SecurityParams, cardinality: usize) -> f64 {
    delta_aep_with((sec.p / 2.0).sqrt() * sec.eps_s, cardinality, sec.aep_log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposableRate {
    pub raw: f64,
    /// `max(raw, 0)`, the usable key fraction.
    pub clamped: f64,
}

/// `R_{M,r} = (n/M) p [R_PE - Δ_AEP(√(p/2) ε_s, N)/√n + (log2(p(1 - ε_s²/2)) + 2 log2(√2 ε_h))/n]`.
pub fn composable_rate(r_pe: f64, sec: &SecurityParams, cardinality: usize) -> Result<ComposableRate> {
    sec.validate()?;
    let n = sec.key_length() as f64;
    let raw = n / sec.m_total as f64
        * sec.p
        * (r_pe - aep_term(sec, cardinality) / n.sqrt() + constant_term(sec) / n);
    Ok(ComposableRate { raw, clamped: raw.max(0.0) })
}

/// Lower bound on the number of extractable secret bits from `n` key signals,
/// `n S(l|E) - √n Δ_AEP + log2(p(1 - ε_s²/2)) + 2 log2(√2 ε_h) - n·leak`.
pub fn secret_bit_bound(
    conditional_entropy: f64,
    sec: &SecurityParams,
    cardinality: usize,
    leak_per_symbol: f64,
) -> Result<f64> {
    sec.validate()?;
    let n = sec.key_length() as f64;
    Ok(n * conditional_entropy - n.sqrt() * aep_term(sec, cardinality) + constant_term(sec) - n * leak_per_symbol)
}

/// `ε_tot = ε_cor + ε_s + ε_h + p ε_PE`.
pub fn epsilon_total(sec: &SecurityParams) -> f64 {
    let cor = if sec.cor_absorbed_in_xi { 0.0 } else { sec.eps_cor };
    cor + sec.eps_s + sec.eps_h + sec.p * sec.eps_pe
}
