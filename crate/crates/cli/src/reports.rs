//! Plain-text reports for the estimation demo and the lemma checks, and the
//! fidelity-sweep CSV.

use std::fmt::Write as _;
use std::io::Write;

use cvqkd_core::cq_lab::{run_lemma_suite, LemmaSuiteReport, LemmaTally, SUITE_EPS};
use cvqkd_core::estimation::{
    estimate, estimate_from_moments, noise_variance, pe_rate_with, sample_channel, sample_moments, stream_mean,
    stream_moments, worst_case, StreamMoments,
};
use cvqkd_core::rates::asymptotic_rate_with;
use cvqkd_core::{gaussian_fidelity, make_signal_state, ChannelParams, ProtocolParams, QuadratureGrid};

use crate::config::RunConfig;
use crate::sweep::fmt;
use crate::CliError;

/// Above this many samples the demo draws per-stream sufficient statistics
/// instead of every sample.
pub const RAW_SAMPLE_LIMIT: u64 = 50_000_000;

pub struct EstimationReport {
    pub text: String,
    pub tau: f64,
    pub tau_hat: f64,
    pub tau_sd: f64,
}

pub fn run_estimation_demo(
    cfg: &RunConfig,
    m: u64,
    seed: u64,
    attenuation_db: Option<f64>,
) -> Result<EstimationReport, CliError> {
    let params = cfg.protocol_params()?;
    let db = match attenuation_db {
        Some(db) => db,
        None => *cfg
            .attenuations()?
            .first()
            .ok_or_else(|| CliError::Config("channel: the estimation demo needs at least one attenuation".into()))?,
    };
    let ch = ChannelParams::from_attenuation_db(db, cfg.channel.epsilon)
        .map_err(|e| CliError::Config(format!("channel: {e}")))?;
    let z = cfg.z_score()?;
    let grid_spec = cfg.grid_spec()?;
    let cutoff = cfg.cutoff()?;
    let method = cfg.method();

    let (moments, est, sampler) = if m <= RAW_SAMPLE_LIMIT {
        let samples = sample_channel(&params, &ch, m, seed).map_err(CliError::input)?;
        let est = estimate(&params, &samples).map_err(CliError::input)?;
        (samples.streams.iter().map(stream_moments).collect::<Vec<_>>(), est, "raw samples")
    } else {
        let moments = sample_moments(&params, &ch, m, seed).map_err(CliError::input)?;
        let est = estimate_from_moments(&params, &moments, m).map_err(CliError::input)?;
        (moments, est, "sufficient statistics")
    };

    let v_no = noise_variance(&params, &ch);
    let a2 = params.alpha * params.alpha;
    let tau_sd = (8.0 * ch.tau() * v_no / (m as f64 * a2)).sqrt();
    let per_stream = moments.first().map_or(0, |s| s.n);
    let wc = worst_case(&est, z);

    let grid = QuadratureGrid::new(&params, &ch, grid_spec).map_err(CliError::numeric)?;
    let r = asymptotic_rate_with(&params, &ch, &grid, cutoff, method).map_err(CliError::numeric)?;
    let r_pe = pe_rate_with(&params, &wc, grid_spec, cutoff, method).map_err(CliError::numeric)?;

    let mut t = String::new();
    let _ = writeln!(t, "parameter estimation demo");
    let _ = writeln!(t, "protocol: N = {}, alpha = {}, nu_th = {}, xi = {}", params.n, fmt(params.alpha), fmt(params.nu_th), fmt(params.xi));
    let _ = writeln!(
        t,
        "channel: {} dB, tau = {}, omega = {}, V_eps = {}",
        fmt(db),
        fmt(ch.tau()),
        fmt(ch.omega()),
        fmt(ch.v_eps())
    );
    let _ = writeln!(t, "m = {m}, seed = {seed}, {per_stream} samples per stream, drawn as {sampler}");
    let _ = writeln!(t);
    let _ = writeln!(t, "{:<8}{:>18}{:>18}{:>18}{:>18}", "stream", "mean theory", "mean sample", "var theory", "var sample");
    for s in &moments {
        let StreamMoments { quadrature, k, mean, variance, .. } = *s;
        let label = format!("{quadrature:?}{k}").to_lowercase();
        let _ = writeln!(
            t,
            "{:<8}{:>18}{:>18}{:>18}{:>18}",
            label,
            fmt(stream_mean(&params, &ch, quadrature, k)),
            fmt(mean),
            fmt(v_no),
            fmt(variance)
        );
    }
    let _ = writeln!(t);
    let _ = writeln!(t, "{:<18}{:>18}{:>18}", "quantity", "theory", "monte carlo");
    let rows = [
        ("tau", ch.tau(), est.tau_hat),
        ("sd(tau_hat)", tau_sd, est.tau_var.sqrt()),
        ("V_no", v_no, est.v_no_hat),
        ("V_eps", ch.v_eps(), est.veps_hat),
        (
            "sd(V_eps_hat)",
            (4.0 * v_no * v_no / m as f64 + tau_sd * tau_sd * params.nu_th * params.nu_th / (2.0 * params.n as f64)).sqrt(),
            est.veps_var.sqrt(),
        ),
    ];
    for (name, theory, mc) in rows {
        let _ = writeln!(t, "{:<18}{:>18}{:>18}", name, fmt(theory), fmt(mc));
    }
    let _ = writeln!(t, "tau_hat - tau = {} standard deviations", fmt((est.tau_hat - ch.tau()) / tau_sd));
    let _ = writeln!(t);
    let _ = writeln!(t, "worst case (z = {}): tau = {}, V_eps = {}", fmt(z), fmt(wc.tau_wc), fmt(wc.veps_wc));
    let _ = writeln!(t, "rate at the true channel: {} bits", fmt(r.rate));
    let _ = writeln!(t, "rate at the worst case:   {} bits", fmt(r_pe.rate));
    Ok(EstimationReport { text: t, tau: ch.tau(), tau_hat: est.tau_hat, tau_sd })
}

fn tally_line(t: &mut String, name: &str, tally: &LemmaTally) {
    let worst = if tally.checked == 0 { "-".to_string() } else { fmt(tally.worst_slack) };
    let _ = writeln!(
        t,
        "{:<34}{:>8}{:>8}{:>11}{:>18}",
        name, tally.checked, tally.skipped, tally.violations, worst
    );
}

pub fn lemma_report(report: &LemmaSuiteReport) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "CQ lemma checks: {} instances, seed {}, eps = {SUITE_EPS}", report.instances, report.seed);
    let _ = writeln!(t, "{:<34}{:>8}{:>8}{:>11}{:>18}", "property", "checked", "skipped", "violations", "worst slack");
    tally_line(&mut t, "blockwise trace distance", &report.identity);
    tally_line(&mut t, "projected min-entropy", &report.min_entropy);
    tally_line(&mut t, "projection probability shift", &report.probability_shift);
    tally_line(&mut t, "projected trace distance", &report.projected_distance);
    tally_line(&mut t, "trace <= purified distance", &report.distance_lower);
    tally_line(&mut t, "purified <= sqrt(2 trace)", &report.distance_upper);
    let _ = writeln!(t, "total violations: {}", report.violations());
    t
}

pub fn run_lemma_checks(instances: usize, seed: u64, corrupt: bool) -> Result<(LemmaSuiteReport, String), CliError> {
    let report = run_lemma_suite(instances, seed, corrupt).map_err(CliError::numeric)?;
    let text = lemma_report(&report);
    Ok((report, text))
}

/// Root fidelity of the `k = 0` and `k = 1` binary signal states against `ν_th`.
pub fn fidelity_curve(alpha: f64, nu_th_max: f64, points: usize) -> Result<Vec<(f64, f64)>, CliError> {
    if !(nu_th_max.is_finite() && nu_th_max >= 0.0) {
        return Err(CliError::Config(format!("--nu-th-max must be non-negative, got {nu_th_max}")));
    }
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    (0..points)
        .map(|i| {
            let nu = nu_th_max * i as f64 / (points - 1) as f64;
            let p = ProtocolParams::new(2, alpha, nu, 1.0).map_err(|e| CliError::Config(format!("--alpha: {e}")))?;
            let a = make_signal_state(0, &p).map_err(CliError::numeric)?;
            let b = make_signal_state(1, &p).map_err(CliError::numeric)?;
            Ok((nu, gaussian_fidelity(&a, &b).map_err(CliError::numeric)?))
        })
        .collect()
}

pub fn write_fidelity_csv<W: Write>(alphas: &[f64], nu_th_max: f64, points: usize, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "nu_th", "fidelity"])?;
    for &alpha in alphas {
        for (nu, f) in fidelity_curve(alpha, nu_th_max, points)? {
            w.write_record([fmt(alpha), fmt(nu), fmt(f)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_rises_towards_one() {
        for alpha in [0.5, 1.0, 2.0] {
            let c = fidelity_curve(alpha, 10.0, 51).unwrap();
            assert!((c[0].1 - (-alpha * alpha / 2.0).exp()).abs() < 1e-12);
            assert!(c.windows(2).all(|w| w[1].1 >= w[0].1));
            assert!(c[50].1 < 1.0);
        }
        // smaller amplitudes saturate closer to one
        let f = |a| fidelity_curve(a, 10.0, 2).unwrap()[1].1;
        assert!(f(0.5) > f(1.0) && f(1.0) > f(2.0));
    }

    #[test]
    fn lemma_report_counts_violations() {
        let (rep, text) = run_lemma_checks(20, 3, true).unwrap();
        assert!(rep.violations() > 0);
        assert!(text.contains(&format!("total violations: {}", rep.violations())));
    }
}
