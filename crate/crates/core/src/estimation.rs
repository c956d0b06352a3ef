//! Parameter estimation from revealed heterodyne samples.
//!
//! Samples are expressed in the per-quadrature normalization where a
//! quadrature of label `k` has mean `√(τ/2) α cos(2πk/N)` (sine for `p`) and
//! variance `V_no = (τ ν_th + V_ε + 2) / 2`, i.e. heterodyne outcomes divided
//! by `√2`. Each of the `m` revealed signals contributes one `q` and one `p`
//! value, so every `(quadrature, k)` stream holds `⌊m/N⌋` samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal};
use statrs::function::erf::erfc_inv;

use crate::error::{domain, Error, Result};
use crate::gaussian::{ChannelParams, ProtocolParams};
use crate::rates::{asymptotic_rate_with, EveStateMethod, GridSpec, QuadratureGrid, RateBreakdown};

/// Confidence multiplier paired with `ε_PE = 1e-10`.
pub const PAPER_Z_SCORE: f64 = 6.5;
/// Trigonometric weights below this are treated as zero.
const TRIG_EPS: f64 = 1e-12;
/// Smallest worst-case transmissivity handed to the rate computation.
const MIN_TAU_WC: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

/// Samples of one quadrature for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub quadrature: Quadrature,
    pub k: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeSamples {
    pub streams: Vec<SampleStream>,
    pub m: u64,
    pub seed: u64,
}

impl PeSamples {
    pub fn per_stream(&self) -> usize {
        self.streams.first().map_or(0, |s| s.values.len())
    }
}

/// Mean and variance of a stream's samples; the variance is the MLE `Σ(x - x̄)²/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamMoments {
    pub quadrature: Quadrature,
    pub k: usize,
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
}

/// Point estimates with their plug-in variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeEstimate {
    pub m: u64,
    pub tau_hat: f64,
    /// `σ² = 8 τ̂ V̂_no / (m α²)`.
    pub tau_var: f64,
    pub v_no_hat: f64,
    pub veps_hat: f64,
    /// `s² = 4 V̂_no² / m + σ² ν_th² / (2N)`.
    pub veps_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub tau_wc: f64,
    pub veps_wc: f64,
    pub z: f64,
}

/// How the confidence multiplier is chosen from `ε_PE`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ZScore {
    /// Always 6.5, the value paired with `ε_PE = 1e-10`.
    #[default]
    Paper,
    /// `√2 erfc⁻¹(ε_PE)`.
    Erfc,
    Fixed(f64),
}

impl ZScore {
    pub fn value(self, eps_pe: f64) -> Result<f64> {
        match self {
            ZScore::Paper => Ok(PAPER_Z_SCORE),
            ZScore::Erfc => {
                if !(eps_pe > 0.0 && eps_pe < 1.0) {
                    return domain(format!("eps_pe must lie in (0, 1), got {eps_pe}"));
                }
                Ok(std::f64::consts::SQRT_2 * erfc_inv(eps_pe))
            }
            ZScore::Fixed(z) if z >= 0.0 && z.is_finite() => Ok(z),
            ZScore::Fixed(z) => domain(format!("z-score must be non-negative, got {z}")),
        }
    }
}

/// Variance of each sampled quadrature, `(τ ν_th + V_ε + 2) / 2`.
pub fn noise_variance(params: &ProtocolParams, ch: &ChannelParams) -> f64 {
    (ch.tau() * params.nu_th + ch.v_eps() + 2.0) / 2.0
}

/// Mean of the stream `(quadrature, k)`.
pub fn stream_mean(params: &ProtocolParams, ch: &ChannelParams, quadrature: Quadrature, k: usize) -> f64 {
    (ch.tau() / 2.0).sqrt() * params.alpha * trig(params, quadrature, k)
}

fn trig(params: &ProtocolParams, quadrature: Quadrature, k: usize) -> f64 {
    let phase = params.phase(k);
    match quadrature {
        Quadrature::Q => phase.cos(),
        Quadrature::P => phase.sin(),
    }
}

fn stream_labels(n: usize) -> impl Iterator<Item = (usize, Quadrature, usize)> {
    (0..n).flat_map(|k| [(2 * k, Quadrature::Q, k), (2 * k + 1, Quadrature::P, k)])
}

fn check_m(params: &ProtocolParams, m: u64) -> Result<u64> {
    let minimum = 20 * params.n as u64;
    if m < minimum {
        return domain(format!("m = {m} is below the minimum of {minimum} samples"));
    }
    Ok(m / params.n as u64)
}

fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws the revealed samples; every stream has its own ChaCha sub-stream.
pub fn sample_channel(params: &ProtocolParams, ch: &ChannelParams, m: u64, seed: u64) -> Result<PeSamples> {
    let per_stream = check_m(params, m)? as usize;
    let sd = noise_variance(params, ch).sqrt();
    let streams = stream_labels(params.n)
        .map(|(index, quadrature, k)| {
            let normal = Normal::new(stream_mean(params, ch, quadrature, k), sd)
                .map_err(|e| Error::Domain(e.to_string()))?;
            let mut rng = stream_rng(seed, index);
            let values = (0..per_stream).map(|_| normal.sample(&mut rng)).collect();
            Ok(SampleStream { quadrature, k, values })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PeSamples { streams, m, seed })
}

pub fn stream_moments(stream: &SampleStream) -> StreamMoments {
    let n = stream.values.len();
    let mean = stream.values.iter().sum::<f64>() / n as f64;
    let variance = stream.values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    StreamMoments { quadrature: stream.quadrature, k: stream.k, n: n as u64, mean, variance }
}

/// Draws stream moments directly from their sampling distributions: the mean
/// is normal with variance `V_no/n` and `n·variance/V_no` is χ² with `n - 1`
/// degrees of freedom.
pub fn sample_moments(params: &ProtocolParams, ch: &ChannelParams, m: u64, seed: u64) -> Result<Vec<StreamMoments>> {
    let n = check_m(params, m)?;
    let v_no = noise_variance(params, ch);
    let chi2 = ChiSquared::new((n - 1) as f64).map_err(|e| Error::Domain(e.to_string()))?;
    stream_labels(params.n)
        .map(|(index, quadrature, k)| {
            let normal = Normal::new(stream_mean(params, ch, quadrature, k), (v_no / n as f64).sqrt())
                .map_err(|e| Error::Domain(e.to_string()))?;
            let mut rng = stream_rng(seed, index);
            let mean = normal.sample(&mut rng);
            let variance = v_no * chi2.sample(&mut rng) / n as f64;
            Ok(StreamMoments { quadrature, k, n, mean, variance })
        })
        .collect()
}

/// Estimators for `τ`, `V_no` and `V_ε` from raw samples.
pub fn estimate(params: &ProtocolParams, samples: &PeSamples) -> Result<PeEstimate> {
    if samples.streams.len() != 2 * params.n {
        return Err(Error::ShapeMismatch(format!(
            "expected {} sample streams, got {}",
            2 * params.n,
            samples.streams.len()
        )));
    }
    let moments: Vec<StreamMoments> = samples.streams.iter().map(stream_moments).collect();
    estimate_from_moments(params, &moments, samples.m)
}

/// Combines per-stream moments. Streams whose trigonometric factor vanishes
/// carry no information on `τ` and get zero weight there.
pub fn estimate_from_moments(params: &ProtocolParams, moments: &[StreamMoments], m: u64) -> Result<PeEstimate> {
    if !(params.alpha > 0.0) {
        return domain("transmissivity cannot be estimated with zero amplitude");
    }
    if moments.is_empty() || m == 0 {
        return domain("no samples to estimate from");
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in moments {
        let c = trig(params, s.quadrature, s.k);
        if c.abs() > TRIG_EPS {
            num += s.mean * s.mean;
            den += c * c;
        }
    }
    let a2 = params.alpha * params.alpha;
    let tau_hat = 2.0 * num / (a2 * den);
    let v_no_hat = moments.iter().map(|s| s.variance).sum::<f64>() / moments.len() as f64;
    let veps_hat = 2.0 * v_no_hat - tau_hat * params.nu_th - 2.0;
    let mf = m as f64;
    let tau_var = 8.0 * tau_hat * v_no_hat / (mf * a2);
    let veps_var = 4.0 * v_no_hat * v_no_hat / mf + tau_var * params.nu_th * params.nu_th / (2.0 * params.n as f64);
    Ok(PeEstimate { m, tau_hat, tau_var, v_no_hat, veps_hat, veps_var })
}

/// Estimates whose point values equal the true parameters; used for
/// deterministic finite-size curves.
pub fn expected_estimate(params: &ProtocolParams, ch: &ChannelParams, m: u64) -> Result<PeEstimate> {
    if !(params.alpha > 0.0) {
        return domain("transmissivity cannot be estimated with zero amplitude");
    }
    if m == 0 {
        return domain("m must be positive");
    }
    let v_no = noise_variance(params, ch);
    let mf = m as f64;
    let tau_var = 8.0 * ch.tau() * v_no / (mf * params.alpha * params.alpha);
    Ok(PeEstimate {
        m,
        tau_hat: ch.tau(),
        tau_var,
        v_no_hat: v_no,
        veps_hat: ch.v_eps(),
        veps_var: 4.0 * v_no * v_no / mf + tau_var * params.nu_th * params.nu_th / (2.0 * params.n as f64),
    })
}

/// Pessimal parameters `τ̂ - zσ` and `V̂_ε + zs`, clamped to `(0, 1]` and `[0, ∞)`.
pub fn worst_case(estimate: &PeEstimate, z: f64) -> WorstCase {
    let tau = estimate.tau_hat - z * estimate.tau_var.max(0.0).sqrt();
    let veps = estimate.veps_hat + z * estimate.veps_var.max(0.0).sqrt();
    WorstCase { tau_wc: tau.clamp(MIN_TAU_WC, 1.0), veps_wc: veps.max(0.0), z }
}

/// Key rate at the worst-case parameters.
pub fn pe_rate(
    params: &ProtocolParams,
    wc: &WorstCase,
    spec: GridSpec,
    cutoff: usize,
) -> Result<RateBreakdown> {
    pe_rate_with(params, wc, spec, cutoff, EveStateMethod::default())
}

pub fn pe_rate_with(
    params: &ProtocolParams,
    wc: &WorstCase,
    spec: GridSpec,
    cutoff: usize,
    method: EveStateMethod,
) -> Result<RateBreakdown> {
    let ch = worst_case_channel(wc)?;
    let grid = QuadratureGrid::new(params, &ch, spec)?;
    asymptotic_rate_with(params, &ch, &grid, cutoff, method)
}

/// Thermal-loss channel realizing the worst-case parameters. At `τ = 1` any
/// excess noise is unphysical for the entangling cloner, so the noise is dropped.
pub fn worst_case_channel(wc: &WorstCase) -> Result<ChannelParams> {
    if wc.tau_wc >= 1.0 {
        ChannelParams::from_v_eps(1.0, 0.0)
    } else {
        ChannelParams::from_v_eps(wc.tau_wc, wc.veps_wc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn worst_case_example() {
        let est = PeEstimate {
            m: 10_000_000,
            tau_hat: 0.5,
            tau_var: 8.0 * 0.5 * 1.0025 / (1e7 * 4.0),
            v_no_hat: 1.0025,
            veps_hat: 0.005,
            veps_var: 4.0 * 1.0025 * 1.0025 / 1e7,
        };
        let wc = worst_case(&est, PAPER_Z_SCORE);
        assert_abs_diff_eq!(wc.tau_wc, 0.49794, epsilon = 1e-5);
        assert_abs_diff_eq!(wc.veps_wc, 0.0091213, epsilon = 1e-6);
        let same = worst_case(&est, 0.0);
        assert_eq!((same.tau_wc, same.veps_wc), (0.5, 0.005));
    }

    #[test]
    fn expected_estimate_matches_plug_in_formulas() {
        let p = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
        let ch = ChannelParams::from_excess_noise(0.5, 0.01).unwrap();
        let est = expected_estimate(&p, &ch, 10_000_000).unwrap();
        assert_abs_diff_eq!(est.v_no_hat, 1.0025, epsilon = 1e-12);
        let wc = worst_case(&est, PAPER_Z_SCORE);
        assert_abs_diff_eq!(wc.tau_wc, 0.49794, epsilon = 1e-5);
        assert_abs_diff_eq!(wc.veps_wc, 0.0091213, epsilon = 1e-6);
    }

    #[test]
    fn erfc_z_is_close_to_paper_value() {
        let z = ZScore::Erfc.value(1e-10).unwrap();
        assert!((z - PAPER_Z_SCORE).abs() < 0.05, "{z}");
        assert_abs_diff_eq!(ZScore::Erfc.value(0.01).unwrap(), 2.5758293, epsilon = 1e-6);
        assert!(ZScore::Fixed(-1.0).value(0.1).is_err());
    }

    #[test]
    fn exact_samples_give_exact_estimates() {
        let p = ProtocolParams::new(3, 1.7, 0.2, 1.0).unwrap();
        let ch = ChannelParams::from_excess_noise(0.4, 0.02).unwrap();
        let streams = stream_labels(3)
            .map(|(_, quadrature, k)| SampleStream { quadrature, k, values: vec![stream_mean(&p, &ch, quadrature, k); 50] })
            .collect();
        let est = estimate(&p, &PeSamples { streams, m: 150, seed: 0 }).unwrap();
        assert_abs_diff_eq!(est.tau_hat, 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(est.v_no_hat, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn small_m_is_rejected() {
        let p = ProtocolParams::new(4, 1.0, 0.0, 1.0).unwrap();
        let ch = ChannelParams::new(0.5, 1.0).unwrap();
        assert!(sample_channel(&p, &ch, 79, 1).is_err());
        assert!(sample_channel(&p, &ch, 80, 1).is_ok());
    }

    #[test]
    fn zero_amplitude_samples_are_centered() {
        let p = ProtocolParams::new(2, 0.0, 0.0, 1.0).unwrap();
        let ch = ChannelParams::new(0.5, 1.0).unwrap();
        for q in [Quadrature::Q, Quadrature::P] {
            for k in 0..2 {
                assert_eq!(stream_mean(&p, &ch, q, k), 0.0);
            }
        }
        let s = sample_channel(&p, &ch, 1000, 3).unwrap();
        assert!(estimate(&p, &s).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = ProtocolParams::new(2, 2.0, 0.0, 1.0).unwrap();
        let ch = ChannelParams::new(0.5, 1.01).unwrap();
        assert_eq!(sample_channel(&p, &ch, 2000, 9).unwrap(), sample_channel(&p, &ch, 2000, 9).unwrap());
        assert_ne!(sample_channel(&p, &ch, 2000, 9).unwrap(), sample_channel(&p, &ch, 2000, 10).unwrap());
        assert_eq!(sample_moments(&p, &ch, 2000, 9).unwrap(), sample_moments(&p, &ch, 2000, 9).unwrap());
    }
}
