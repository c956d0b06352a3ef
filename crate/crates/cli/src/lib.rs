//! Command-line plumbing for the CV-QKD toolkit: TOML run configurations,
//! attenuation sweeps written as CSV, the estimation demo and the CQ lemma
//! checks.

pub mod config;
pub mod reports;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{0} lemma violation(s)")]
    LemmaViolation(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Core errors caused by user input are config errors; the rest are numerical.
    pub fn input(e: cvqkd_core::Error) -> Self {
        match e {
            cvqkd_core::Error::Resolution(m) => CliError::Numeric(m),
            other => CliError::Config(other.to_string()),
        }
    }

    pub fn numeric(e: cvqkd_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }

    /// 0 success, 1 config error, 2 numerical failure, 3 lemma violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::LemmaViolation(_) => 3,
        }
    }
}
