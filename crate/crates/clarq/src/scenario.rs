//! Reference evaluation scenarios.
//!
//! Two named channel scenarios are used throughout the experiments: a
//! symmetric pair (scenario A) and an asymmetric pair (scenario B), both
//! with the default frame geometry (10 ms loop deadline, 4 µs symbols,
//! zero-cost feedback → 2500 symbols per frame), 16-bit packets, and a
//! per-slot error ceiling of 0.2.
//!
//! SNR presets are defined on the *linear* scale — scenario A at 0.05 for
//! both directions, scenario B at 0.07 uplink / 0.03 downlink — and the
//! usual dB labels (−13, −11, −15 dB) are rounded names for these values.
//! The linear values are the ones that reproduce the reference minimal
//! blocklengths {322, 232, 533} exactly, so they are the source of truth
//! and the dB labels are derived.

use crate::fbl::{ChannelSpec, FblParams, FrameBudget};
use crate::{ClarqError, Result};
use serde::Serialize;

/// A fully specified evaluation setup: channels, payload, frame geometry.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    /// Preset name ("scenario_a", "scenario_b", or "custom").
    pub name: String,
    /// Uplink channel.
    pub ul: ChannelSpec,
    /// Downlink channel.
    pub dl: ChannelSpec,
    /// Payload and per-slot reliability constraint.
    pub params: FblParams,
    /// Frame timing.
    pub budget: FrameBudget,
}

impl Scenario {
    /// Total blocklength of the frame.
    pub fn n_max(&self) -> u32 {
        self.budget.n_max()
    }
}

fn default_budget() -> FrameBudget {
    FrameBudget::new(10e-3, 4e-6, 0.0).expect("static frame geometry is valid")
}

/// Symmetric reference scenario: γ^U = γ^D = 0.05 (−13 dB label).
pub fn scenario_a() -> Scenario {
    Scenario {
        name: "scenario_a".into(),
        ul: ChannelSpec::from_linear(0.05).expect("static SNR"),
        dl: ChannelSpec::from_linear(0.05).expect("static SNR"),
        params: FblParams::new(16, 0.2).expect("static params"),
        budget: default_budget(),
    }
}

/// Asymmetric reference scenario: γ^U = 0.07 (−11 dB label),
/// γ^D = 0.03 (−15 dB label).
pub fn scenario_b() -> Scenario {
    Scenario {
        name: "scenario_b".into(),
        ul: ChannelSpec::from_linear(0.07).expect("static SNR"),
        dl: ChannelSpec::from_linear(0.03).expect("static SNR"),
        params: FblParams::new(16, 0.2).expect("static params"),
        budget: default_budget(),
    }
}

/// Look a preset up by name (case-insensitive; "a"/"b" accepted).
pub fn by_name(name: &str) -> Result<Scenario> {
    match name.to_ascii_lowercase().as_str() {
        "scenario_a" | "a" => Ok(scenario_a()),
        "scenario_b" | "b" => Ok(scenario_b()),
        other => Err(ClarqError::Config(format!(
            "unknown scenario preset {other:?} (expected scenario_a or scenario_b)"
        ))),
    }
}
