//! Numerical toolkit for phase-encoded continuous-variable QKD under
//! collective entangling-cloner attacks.
//!
//! - [`gaussian`]: phase-space states, the thermal-loss dilation and heterodyne conditioning.
//! - [`fock`]: truncated Fock-basis conversion, entropies and fidelities.
//! - [`rates`]: Bob's symbol statistics, Eve's Holevo information and the asymptotic key rate.
//! - [`estimation`]: parameter-estimation sampling, estimators and worst-case parameters.
//! - [`composable`]: finite-size composable key rate and ε bookkeeping.
//! - [`cq_lab`]: numerical checks of min-entropy and trace-distance lemmas on small CQ states.

pub mod composable;
pub mod cq_lab;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod gaussian;
pub mod linalg;
mod parallel;
pub mod quadrature;
pub mod rates;

pub use error::{Error, Result};
pub use fock::{gaussian_to_fock, trace_fidelity, von_neumann_entropy, FockDensityMatrix};
pub use gaussian::{
    beam_splitter, channel_output, gaussian_fidelity, heterodyne_condition, make_signal_state,
    make_tmsv, ChannelParams, GaussianState, ProtocolParams,
};
pub use rates::{
    asymptotic_rate, eve_conditional_state, holevo_bound, mutual_information, outcome_density,
    transition_matrix, QuadratureGrid, RateBreakdown,
};
