//! Closed-loop ARQ (CLARQ) blocklength allocation for URLLC frames.
//!
//! A closed-loop URLLC transaction must fit a complete uplink command *and*
//! its downlink confirmation into one hard frame deadline `T`. With short
//! packets, finite-blocklength effects dominate: the per-slot error rate
//! depends on the slot length `n` through the normal approximation
//!
//! ```text
//! ε(n) = Q( sqrt(n / V) · (C − d/n) · ln 2 )
//! ```
//!
//! where `C` is the Shannon capacity and `V` the dispersion of the link.
//! CLARQ exploits the closed loop: the frame starts with an uplink slot and
//! reserves the remainder for downlink; on an uplink failure the reserved
//! remainder is re-split to host another uplink attempt, and on success the
//! whole remainder carries a single downlink slot. Choosing how much of the
//! remaining blocklength each retransmission may consume is an integer
//! dynamic program over the remaining budget.
//!
//! The crate provides:
//!
//! - [`fbl`] — finite-blocklength error-rate math: `Q`/`Q⁻¹`, per-slot error
//!   rates, minimal slot lengths, and the type-II HARQ cumulative variant;
//! - [`oneshot`] — the static baselines: optimal one-shot uplink/downlink
//!   split, static multi-slot HARQ evaluation, and the greedy stage-wise
//!   equal-error policy;
//! - [`dp`] — the integer dynamic program producing the optimal policy
//!   tables, schedule extraction, analytic reliability/energy evaluation and
//!   structural verification;
//! - [`sim`] — a discrete-event protocol simulator with reproducible,
//!   counter-based randomness;
//! - [`fading`] — Monte Carlo campaigns over shadowing + Rayleigh fading;
//! - [`lut`] — quantized-SNR lookup tables for O(I) deployment, with a
//!   binary file format and a resolution-sensitivity experiment;
//! - [`apc`] — adaptive power control: joint discrete power / blocklength
//!   search under a per-frame uplink energy budget;
//! - [`scenario`], [`config`], [`experiments`] — presets, experiment
//!   configuration and the experiment runner backing the `clarq` binary.
//!
//! All probabilities are raw reals (never percent or dB); SNR enters public
//! interfaces in dB and is converted to linear exactly once at the boundary.

pub mod apc;
pub mod config;
pub mod dp;
pub mod experiments;
pub mod fading;
pub mod fbl;
pub mod lut;
pub mod oneshot;
pub mod scenario;
pub mod sim;

pub use fbl::{ChannelSpec, FblParams, FrameBudget};

/// Crate-wide error type.
///
/// `Infeasible` is a *result*, not a bug: it reports instances where no
/// transmission schedule can satisfy the slot minima, which downstream
/// aggregation counts as loop error 1.0.
#[derive(Debug, thiserror::Error)]
pub enum ClarqError {
    /// Invalid configuration or parameter value.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// No feasible schedule exists for the given instance.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed or incompatible serialized artifact.
    #[error("malformed file: {0}")]
    Format(String),
}

impl From<csv::Error> for ClarqError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ClarqError::Io(io),
            other => ClarqError::Format(format!("csv: {other:?}")),
        }
    }
}

impl From<serde_json::Error> for ClarqError {
    fn from(e: serde_json::Error) -> Self {
        ClarqError::Format(format!("json: {e}"))
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ClarqError>;
