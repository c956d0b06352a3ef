//! Rate sweeps over attenuation and the CSV they produce.

use std::io::Write;

use cvqkd_core::composable::{composable_rate, epsilon_total};
use cvqkd_core::estimation::{estimate_from_moments, expected_estimate, pe_rate_with, sample_moments, worst_case, WorstCase};
use cvqkd_core::rates::asymptotic_rate_with;
use cvqkd_core::{ChannelParams, QuadratureGrid};
use rayon::prelude::*;

use crate::config::{Mode, PeMode, Series, SweepPlan};
use crate::CliError;

/// Column order of every sweep CSV.
pub const COLUMNS: [&str; 19] = [
    "series",
    "attenuation_db",
    "tau",
    "omega",
    "v_eps",
    "m_total",
    "mi_bits",
    "holevo_bits",
    "rate_asymptotic",
    "tau_wc",
    "veps_wc",
    "rate_pe",
    "rate_composable_raw",
    "rate_composable_clamped",
    "eps_total",
    "cutoff",
    "nodes",
    "seed",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub series: String,
    pub attenuation_db: f64,
    pub tau: f64,
    pub omega: f64,
    pub v_eps: f64,
    pub m_total: Option<u64>,
    pub mi_bits: Option<f64>,
    pub holevo_bits: Option<f64>,
    pub rate_asymptotic: Option<f64>,
    pub tau_wc: Option<f64>,
    pub veps_wc: Option<f64>,
    pub rate_pe: Option<f64>,
    pub rate_composable_raw: Option<f64>,
    pub rate_composable_clamped: Option<f64>,
    pub eps_total: Option<f64>,
    pub status: String,
}

impl Row {
    fn new(series: &str, ch: &ChannelParams) -> Self {
        Self {
            series: series.to_string(),
            attenuation_db: ch.attenuation_db(),
            tau: ch.tau(),
            omega: ch.omega(),
            v_eps: ch.v_eps(),
            m_total: None,
            mi_bits: None,
            holevo_bits: None,
            rate_asymptotic: None,
            tau_wc: None,
            veps_wc: None,
            rate_pe: None,
            rate_composable_raw: None,
            rate_composable_clamped: None,
            eps_total: None,
            status: "ok".into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fail(&mut self, e: &cvqkd_core::Error) {
        // keep the CSV single-field even if the message has commas or newlines
        self.status = e.to_string().replace([',', '\n'], ";");
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub cutoff: usize,
    pub nodes: String,
    pub seed: u64,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn series<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.series == label)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.series.clone(),
                fmt(r.attenuation_db),
                fmt(r.tau),
                fmt(r.omega),
                fmt(r.v_eps),
                r.m_total.map(|m| m.to_string()).unwrap_or_default(),
                opt(r.mi_bits),
                opt(r.holevo_bits),
                opt(r.rate_asymptotic),
                opt(r.tau_wc),
                opt(r.veps_wc),
                opt(r.rate_pe),
                opt(r.rate_composable_raw),
                opt(r.rate_composable_clamped),
                opt(r.eps_total),
                self.cutoff.to_string(),
                self.nodes.clone(),
                self.seed.to_string(),
                r.status.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row_seed(seed: u64, point: usize, m_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((point as u64) << 16 | m_index as u64)
}

fn worst_case_for(plan: &SweepPlan, series: &Series, ch: &ChannelParams, m_pe: u64, seed: u64) -> cvqkd_core::Result<WorstCase> {
    let est = match plan.pe_mode {
        PeMode::Expected => expected_estimate(&series.params, ch, m_pe)?,
        PeMode::Simulated => estimate_from_moments(&series.params, &sample_moments(&series.params, ch, m_pe, seed)?, m_pe)?,
    };
    Ok(worst_case(&est, plan.z))
}

fn run_point(plan: &SweepPlan, series: &Series, point: usize) -> Vec<Row> {
    let ch = &series.channels[point];
    let base = Row::new(&series.label, ch);
    let mut asym = base.clone();
    let want_asymptotic = !series.finite_size || plan.mode == Mode::Both;
    if want_asymptotic {
        let r = series
            .params
            .with_xi(series.asymptotic_xi)
            .and_then(|p| Ok((p, QuadratureGrid::new(&p, ch, plan.grid)?)))
            .and_then(|(p, grid)| asymptotic_rate_with(&p, ch, &grid, plan.cutoff, plan.method));
        match r {
            Ok(r) => {
                asym.mi_bits = Some(r.mi);
                asym.holevo_bits = Some(r.holevo);
                asym.rate_asymptotic = Some(r.rate);
            }
            Err(e) => asym.fail(&e),
        }
    }
    if !series.finite_size || plan.m_totals.is_empty() {
        return vec![asym];
    }
    plan.m_totals
        .iter()
        .enumerate()
        .map(|(j, &m_total)| {
            let mut row = asym.clone();
            row.m_total = Some(m_total);
            let sec = plan.security.with_m_total(m_total);
            let finite = worst_case_for(plan, series, ch, sec.pe_samples(), row_seed(plan.seed, point, j)).and_then(|wc| {
                let r_pe = pe_rate_with(&series.params, &wc, plan.grid, plan.cutoff, plan.method)?.rate;
                Ok((wc, r_pe, composable_rate(r_pe, &sec, series.params.n)?))
            });
            match finite {
                Ok((wc, r_pe, c)) => {
                    row.tau_wc = Some(wc.tau_wc);
                    row.veps_wc = Some(wc.veps_wc);
                    row.rate_pe = Some(r_pe);
                    row.rate_composable_raw = Some(c.raw);
                    row.rate_composable_clamped = Some(c.clamped);
                    row.eps_total = Some(epsilon_total(&sec));
                }
                Err(e) if row.is_ok() => row.fail(&e),
                Err(_) => {}
            }
            row
        })
        .collect()
}

/// Evaluates every point; rows come out in input order whatever the
/// completion order of the parallel workers.
pub fn run_sweep(plan: &SweepPlan) -> SweepResult {
    let tasks: Vec<(usize, usize)> = plan
        .series
        .iter()
        .enumerate()
        .flat_map(|(s, series)| (0..series.channels.len()).map(move |i| (s, i)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(s, i)| {
            let rows = run_point(plan, &plan.series[s], i);
            log::info!("{} at {:.2} dB done", plan.series[s].label, plan.series[s].channels[i].attenuation_db());
            rows
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    SweepResult {
        rows,
        cutoff: plan.cutoff,
        nodes: format!("{}x{}", plan.grid.beta_nodes, plan.grid.theta_nodes),
        seed: plan.seed,
    }
}
