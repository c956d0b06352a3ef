//! Sweep configuration: a TOML file with `protocol`, `channel`, `security`,
//! `numerics` and `output` sections, plus optional `[[comparison]]` series.

use std::path::Path;

use cvqkd_core::composable::{AepLog, SecurityParams};
use cvqkd_core::estimation::ZScore;
use cvqkd_core::rates::{EveStateMethod, GridSpec};
use cvqkd_core::{ChannelParams, ProtocolParams};
use serde::Deserialize;

use crate::CliError;

pub const PRESETS: [(&str, &str); 3] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn preset_source(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}` (expected fig1, fig2 or fig4)")))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSection,
    pub channel: ChannelSection,
    #[serde(default)]
    pub security: SecuritySection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub comparison: Vec<ComparisonSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    #[serde(default)]
    pub nu_th: f64,
    #[serde(default = "one")]
    pub xi: f64,
    /// Efficiency used for the `rate_asymptotic` column; defaults to `xi`.
    pub asymptotic_xi: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridValues::List(v) => v.clone(),
            GridValues::Range { start, stop, step } => {
                let count = ((stop - start) / step + 1e-9).floor() as i64 + 1;
                (0..count.max(0)).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub attenuation_db: Option<GridValues>,
    pub tau: Option<GridValues>,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ZScoreSetting {
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecuritySection {
    #[serde(default = "tiny")]
    pub eps_s: f64,
    #[serde(default = "tiny")]
    pub eps_h: f64,
    #[serde(default = "tiny")]
    pub eps_pe: f64,
    #[serde(default = "tiny")]
    pub eps_cor: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(rename = "M", default = "default_m")]
    pub m: Vec<f64>,
    #[serde(default = "yes")]
    pub cor_absorbed_in_xi: bool,
    pub z_score: Option<ZScoreSetting>,
}

impl Default for SecuritySection {
    fn default() -> Self {
        Self {
            eps_s: tiny(),
            eps_h: tiny(),
            eps_pe: tiny(),
            eps_cor: tiny(),
            p: default_p(),
            r: default_r(),
            m: default_m(),
            cor_absorbed_in_xi: true,
            z_score: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum AepLogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PeMode {
    #[default]
    Expected,
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "default_nodes")]
    pub quad_nodes_beta: usize,
    #[serde(default = "default_nodes")]
    pub quad_nodes_theta: usize,
    #[serde(default = "default_margin")]
    pub beta_sigma_margin: f64,
    #[serde(default)]
    pub aep_log_base: AepLogBase,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pe_mode: PeMode,
    /// Gauss–Hermite order for thermal signal states; 0 selects direct conversion.
    #[serde(default = "default_mixture")]
    pub mixture_order: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            fock_cutoff: default_cutoff(),
            quad_nodes_beta: default_nodes(),
            quad_nodes_theta: default_nodes(),
            beta_sigma_margin: default_margin(),
            aep_log_base: AepLogBase::default(),
            seed: 0,
            pe_mode: PeMode::default(),
            mixture_order: default_mixture(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Asymptotic,
    Composable,
    #[default]
    Both,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv_path: Option<String>,
    #[serde(default)]
    pub mode: Mode,
    /// Value of the `series` column for the main sweep.
    pub label: Option<String>,
}

/// Extra asymptotic curve over the same attenuations, e.g. a pure-loss or
/// coherent-state reference.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSection {
    pub label: String,
    pub nu_th: Option<f64>,
    pub epsilon: Option<f64>,
    pub xi: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn tiny() -> f64 {
    1e-10
}
fn default_p() -> f64 {
    0.9
}
fn default_r() -> f64 {
    0.01
}
fn default_m() -> Vec<f64> {
    vec![1e9]
}
fn yes() -> bool {
    true
}
fn default_cutoff() -> usize {
    10
}
fn default_nodes() -> usize {
    96
}
fn default_margin() -> f64 {
    10.0
}
fn default_mixture() -> usize {
    4
}

/// One curve of a sweep, fully validated.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub params: ProtocolParams,
    pub asymptotic_xi: f64,
    pub channels: Vec<ChannelParams>,
    /// Only the main series carries finite-size columns.
    pub finite_size: bool,
}

/// Validated, ready-to-run sweep.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub series: Vec<Series>,
    pub security: SecurityParams,
    pub m_totals: Vec<u64>,
    pub z: f64,
    pub grid: GridSpec,
    pub cutoff: usize,
    pub method: EveStateMethod,
    pub seed: u64,
    pub pe_mode: PeMode,
    pub mode: Mode,
    pub csv_path: Option<String>,
}

fn field<T>(path: &str, r: cvqkd_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("{path}: {e}")))
}

fn check(path: &str, ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: {msg}")))
    }
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, laid over `preset` when one is given.
    pub fn load(path: Option<&Path>, preset: Option<&str>) -> Result<Self, CliError> {
        let mut value = match preset {
            Some(name) => parse_table(preset_source(name)?)?,
            None => toml::Table::new(),
        };
        if let Some(path) = path {
            let src = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            merge(&mut value, parse_table(&src)?);
        }
        if value.is_empty() {
            return Err(CliError::Config("either --config or --preset is required".into()));
        }
        value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn attenuations(&self) -> Result<Vec<f64>, CliError> {
        match (&self.channel.attenuation_db, &self.channel.tau) {
            (Some(db), None) => Ok(db.values()),
            (None, Some(tau)) => tau
                .values()
                .iter()
                .map(|&t| {
                    check("channel.tau", t > 0.0 && t <= 1.0, "transmissivities must lie in (0, 1]")?;
                    Ok(-10.0 * t.log10())
                })
                .collect(),
            (Some(_), Some(_)) => Err(CliError::Config("channel: give attenuation_db or tau, not both".into())),
            (None, None) => Err(CliError::Config("channel: attenuation_db or tau is required".into())),
        }
    }

    fn channels(&self, path: &str, epsilon: f64) -> Result<Vec<ChannelParams>, CliError> {
        check(path, epsilon.is_finite() && epsilon >= 0.0, "excess noise must be non-negative")?;
        self.attenuations()?
            .iter()
            .map(|&db| {
                if db == 0.0 && epsilon == 0.0 {
                    return field(path, ChannelParams::new(1.0, 1.0));
                }
                field(path, ChannelParams::from_attenuation_db(db, epsilon)).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{m} (at {db} dB)")),
                    other => other,
                })
            })
            .collect()
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams, CliError> {
        let p = &self.protocol;
        field("protocol", ProtocolParams::new(p.n, p.alpha, p.nu_th, p.xi))
    }

    pub fn security_params(&self, m_total: u64) -> Result<SecurityParams, CliError> {
        let s = &self.security;
        let sec = SecurityParams {
            eps_s: s.eps_s,
            eps_h: s.eps_h,
            eps_pe: s.eps_pe,
            eps_cor: s.eps_cor,
            p: s.p,
            r: s.r,
            m_total,
            cor_absorbed_in_xi: s.cor_absorbed_in_xi,
            aep_log: match self.numerics.aep_log_base {
                AepLogBase::Two => AepLog::Base2,
                AepLogBase::E => AepLog::Natural,
            },
        };
        field("security", sec.validate())?;
        Ok(sec)
    }

    pub fn z_score(&self) -> Result<f64, CliError> {
        let policy = match &self.security.z_score {
            None => ZScore::Paper,
            Some(ZScoreSetting::Named(n)) if n == "paper" => ZScore::Paper,
            Some(ZScoreSetting::Named(n)) if n == "erfc" => ZScore::Erfc,
            Some(ZScoreSetting::Named(n)) => {
                return Err(CliError::Config(format!(
                    "security.z_score: expected \"paper\", \"erfc\" or a number, got \"{n}\""
                )))
            }
            Some(ZScoreSetting::Fixed(z)) => ZScore::Fixed(*z),
        };
        field("security.z_score", policy.value(self.security.eps_pe))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let n = &self.numerics;
        check("numerics.quad_nodes_beta", n.quad_nodes_beta >= 2, "need at least 2 nodes")?;
        check("numerics.quad_nodes_theta", n.quad_nodes_theta >= 2, "need at least 2 nodes")?;
        check("numerics.beta_sigma_margin", n.beta_sigma_margin > 0.0, "must be positive")?;
        Ok(GridSpec { beta_nodes: n.quad_nodes_beta, theta_nodes: n.quad_nodes_theta, sigma_margin: n.beta_sigma_margin })
    }

    pub fn cutoff(&self) -> Result<usize, CliError> {
        let c = self.numerics.fock_cutoff;
        check("numerics.fock_cutoff", (2..=40).contains(&c), "must lie in 2..=40")?;
        Ok(c)
    }

    pub fn method(&self) -> EveStateMethod {
        match self.numerics.mixture_order {
            0 => EveStateMethod::DirectConversion,
            k => EveStateMethod::PureDecomposition { mixture_order: k },
        }
    }

    pub fn m_totals(&self) -> Result<Vec<u64>, CliError> {
        self.security
            .m
            .iter()
            .map(|&m| {
                check("security.M", m >= 1.0 && m.fract() == 0.0 && m < 1.8e19, "block sizes must be positive integers")?;
                Ok(m as u64)
            })
            .collect()
    }

    pub fn plan(&self) -> Result<SweepPlan, CliError> {
        let params = self.protocol_params()?;
        let asymptotic_xi = self.protocol.asymptotic_xi.unwrap_or(params.xi);
        check("protocol.asymptotic_xi", (0.0..=1.0).contains(&asymptotic_xi), "must lie in [0, 1]")?;
        let mode = self.output.mode;
        let m_totals = if mode == Mode::Asymptotic { Vec::new() } else { self.m_totals()? };
        let security = self.security_params(m_totals.first().copied().unwrap_or(1_000_000_000))?;
        for &m in &m_totals {
            self.security_params(m)?;
        }
        let mut series = vec![Series {
            label: self.output.label.clone().unwrap_or_else(|| "main".into()),
            params,
            asymptotic_xi,
            channels: self.channels("channel.epsilon", self.channel.epsilon)?,
            finite_size: mode != Mode::Asymptotic,
        }];
        for (i, c) in self.comparison.iter().enumerate() {
            let path = format!("comparison[{i}]");
            check(&path, !c.label.is_empty() && !c.label.contains(','), "label must be non-empty without commas")?;
            let p = field(
                &path,
                ProtocolParams::new(params.n, params.alpha, c.nu_th.unwrap_or(params.nu_th), c.xi.unwrap_or(asymptotic_xi)),
            )?;
            series.push(Series {
                label: c.label.clone(),
                params: p,
                asymptotic_xi: p.xi,
                channels: self.channels(&format!("{path}.epsilon"), c.epsilon.unwrap_or(self.channel.epsilon))?,
                finite_size: false,
            });
        }
        if let Some(label) = &self.output.label {
            check("output.label", !label.is_empty() && !label.contains(','), "label must be non-empty without commas")?;
        }
        Ok(SweepPlan {
            series,
            security,
            m_totals,
            z: self.z_score()?,
            grid: self.grid_spec()?,
            cutoff: self.cutoff()?,
            method: self.method(),
            seed: self.numerics.seed,
            pe_mode: self.numerics.pe_mode,
            mode,
            csv_path: self.output.csv_path.clone(),
        })
    }
}

fn parse_table(src: &str) -> Result<toml::Table, CliError> {
    src.parse::<toml::Table>().map_err(|e| CliError::Config(e.to_string()))
}

/// Deep merge: tables merge key by key, anything else is replaced.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
