//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Every function returns a flat `Float64Array`; the page knows the layout.

use cvqkd_core::composable::{composable_rate, SecurityParams};
use cvqkd_core::rates::{asymptotic_rate, GridSpec};
use cvqkd_core::{gaussian_fidelity, make_signal_state, ChannelParams, ProtocolParams, QuadratureGrid};
use wasm_bindgen::prelude::*;

fn js(e: cvqkd_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn linspace(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    (0..points).map(move |i| lo + step * i as f64)
}

/// Fidelity of the two binary signal states on `points` values of `ν_th` in `[0, nu_th_max]`.
#[wasm_bindgen]
pub fn fidelity_curve(alpha: f64, nu_th_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    linspace(0.0, nu_th_max, points)
        .map(|nu| {
            let p = ProtocolParams::new(2, alpha, nu, 1.0).map_err(js)?;
            gaussian_fidelity(&make_signal_state(0, &p).map_err(js)?, &make_signal_state(1, &p).map_err(js)?).map_err(js)
        })
        .collect()
}

/// Composable rate against `log10 M` for a fixed `R_PE`; NaN where the block is too short.
#[wasm_bindgen]
pub fn composable_curve(
    r_pe: f64,
    cardinality: usize,
    r: f64,
    p: f64,
    eps: f64,
    log_m_min: f64,
    log_m_max: f64,
    points: usize,
) -> Vec<f64> {
    linspace(log_m_min, log_m_max, points)
        .map(|lm| {
            let sec = SecurityParams {
                eps_s: eps,
                eps_h: eps,
                eps_pe: eps,
                eps_cor: eps,
                p,
                r,
                m_total: 10f64.powf(lm).round() as u64,
                ..SecurityParams::default()
            };
            composable_rate(r_pe, &sec, cardinality).map_or(f64::NAN, |c| c.raw)
        })
        .collect()
}

/// Asymptotic rate over `points` attenuations in `[db_min, db_max]`, as
/// consecutive `(dB, I, χ, R)` quadruples.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn rate_curve(
    n: usize,
    alpha: f64,
    nu_th: f64,
    epsilon: f64,
    xi: f64,
    db_min: f64,
    db_max: f64,
    points: usize,
    cutoff: usize,
    nodes: usize,
) -> Result<Vec<f64>, JsError> {
    let params = ProtocolParams::new(n, alpha, nu_th, xi).map_err(js)?;
    let spec = GridSpec { beta_nodes: nodes, theta_nodes: nodes, ..GridSpec::default() };
    let mut out = Vec::with_capacity(4 * points);
    for db in linspace(db_min, db_max, points) {
        let ch = ChannelParams::from_attenuation_db(db, epsilon).map_err(js)?;
        let grid = QuadratureGrid::new(&params, &ch, spec).map_err(js)?;
        let r = asymptotic_rate(&params, &ch, &grid, cutoff).map_err(js)?;
        out.extend([db, r.mi, r.holevo, r.rate]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_starts_at_the_coherent_overlap() {
        let f = fidelity_curve(1.0, 1.0, 3).unwrap();
        assert!((f[0] - (-0.5f64).exp()).abs() < 1e-12);
        assert!(f[2] > f[0]);
    }

    #[test]
    fn composable_curve_rises_with_block_size() {
        let c = composable_curve(0.2, 2, 0.01, 0.9, 1e-10, 8.0, 14.0, 7);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        assert!(composable_curve(0.2, 2, 0.5, 0.9, 1e-10, 0.0, 0.0, 1)[0].is_nan());
    }

    #[test]
    fn rate_curve_layout() {
        let r = rate_curve(2, 2.0, 0.0, 0.01, 1.0, 1.0, 3.0, 2, 8, 32).unwrap();
        assert_eq!(r.len(), 8);
        assert_eq!((r[0], r[4]), (1.0, 3.0));
        assert!(r[3] > r[7]);
    }
}
