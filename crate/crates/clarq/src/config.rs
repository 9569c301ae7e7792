//! Experiment configuration: one TOML document is the durable, diffable
//! record of an experiment, and every command-line flag is an override of
//! a config key. Unknown fields are rejected so a typo cannot silently
//! fall back to a default.

use crate::scenario::{self, Scenario};
use crate::fading::FadingModel;
use crate::fbl::{ChannelSpec, FblParams, FrameBudget};
use crate::{ClarqError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The eight runnable experiments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Solve one policy, print and store the schedule and tables.
    #[default]
    Policy,
    /// Per-n_max schedule/error/energy sweep.
    SweepNmax,
    /// Three-strategy loop-error comparison per n_max.
    Benchmark,
    /// Loop error over an SNR × packet-size grid.
    SensitivityGrid,
    /// Monte Carlo campaign over random channel realizations.
    FadingCampaign,
    /// Lookup-table grid-pitch sensitivity.
    LutResolution,
    /// Adaptive-power-control case study.
    ApcCase,
    /// Frame-level protocol simulation.
    Simulate,
}

impl ExperimentKind {
    /// Stable label: subcommand name, file prefix, metadata key.
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Policy => "policy",
            ExperimentKind::SweepNmax => "sweep_nmax",
            ExperimentKind::Benchmark => "benchmark",
            ExperimentKind::SensitivityGrid => "sensitivity_grid",
            ExperimentKind::FadingCampaign => "fading_campaign",
            ExperimentKind::LutResolution => "lut_resolution",
            ExperimentKind::ApcCase => "apc_case",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

/// Scenario selection: a preset plus any number of field overrides.
/// Either direction's SNR may be given on the linear or the dB scale, but
/// not both.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Preset name ("scenario_a" default, or "scenario_b").
    pub preset: Option<String>,
    /// Uplink SNR override, linear power ratio.
    pub ul_snr_linear: Option<f64>,
    /// Downlink SNR override, linear power ratio.
    pub dl_snr_linear: Option<f64>,
    /// Uplink SNR override, dB.
    pub ul_snr_db: Option<f64>,
    /// Downlink SNR override, dB.
    pub dl_snr_db: Option<f64>,
    /// Packet size override, bits.
    pub packet_bits: Option<u32>,
    /// Per-slot error ceiling override.
    pub eps_max: Option<f64>,
    /// Loop deadline override, µs.
    pub frame_time_us: Option<f64>,
    /// Symbol length override, µs.
    pub symbol_time_us: Option<f64>,
    /// Feedback delay override, µs.
    pub feedback_time_us: Option<f64>,
    /// Direct blocklength override; sets the frame time to exactly
    /// `n_max` symbols (applied after any timing overrides).
    pub n_max: Option<u32>,
}

impl ScenarioConfig {
    /// Expand the preset and apply the overrides.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut sc = match &self.preset {
            Some(name) => scenario::by_name(name)?,
            None => scenario::scenario_a(),
        };
        sc.ul = resolve_channel(&sc.ul, self.ul_snr_linear, self.ul_snr_db, "ul")?;
        sc.dl = resolve_channel(&sc.dl, self.dl_snr_linear, self.dl_snr_db, "dl")?;
        if self.packet_bits.is_some() || self.eps_max.is_some() {
            sc.params = FblParams::new(
                self.packet_bits.unwrap_or(sc.params.packet_bits),
                self.eps_max.unwrap_or(sc.params.eps_max),
            )?;
        }
        let mut frame = self.frame_time_us.map_or(sc.budget.frame_time, us_to_s);
        let symbol = self.symbol_time_us.map_or(sc.budget.symbol_time, us_to_s);
        let feedback = self.feedback_time_us.map_or(sc.budget.feedback_time, us_to_s);
        if let Some(n_max) = self.n_max {
            if n_max == 0 {
                return Err(ClarqError::Config("n_max must be ≥ 1".into()));
            }
            frame = n_max as f64 * symbol;
        }
        sc.budget = FrameBudget::new(frame, symbol, feedback)?;
        if self.has_overrides() {
            sc.name = format!("{}+overrides", sc.name);
        }
        Ok(sc)
    }

    fn has_overrides(&self) -> bool {
        self.ul_snr_linear.is_some()
            || self.dl_snr_linear.is_some()
            || self.ul_snr_db.is_some()
            || self.dl_snr_db.is_some()
            || self.packet_bits.is_some()
            || self.eps_max.is_some()
            || self.frame_time_us.is_some()
            || self.symbol_time_us.is_some()
            || self.feedback_time_us.is_some()
            || self.n_max.is_some()
    }
}

fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}

fn resolve_channel(
    base: &ChannelSpec,
    linear: Option<f64>,
    db: Option<f64>,
    which: &str,
) -> Result<ChannelSpec> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(ClarqError::Config(format!(
            "{which}_snr_linear and {which}_snr_db are mutually exclusive"
        ))),
        (Some(lin), None) => ChannelSpec::from_linear(lin),
        (None, Some(db)) => ChannelSpec::from_db(db),
        (None, None) => Ok(*base),
    }
}

/// Range settings for the per-n_max experiments (sweep, benchmark).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// First n_max of the sweep; defaults to the smallest feasible frame.
    pub n_max_start: Option<u32>,
    /// Last n_max (inclusive); defaults to the scenario frame.
    pub n_max_stop: Option<u32>,
    /// Stride; defaults to 1.
    pub n_max_step: Option<u32>,
}

impl SweepConfig {
    /// Concrete (start, stop, step) for a scenario, validated.
    pub fn range(&self, feasible_floor: u32, scenario_n_max: u32) -> Result<(u32, u32, u32)> {
        let start = self.n_max_start.unwrap_or(feasible_floor);
        let stop = self.n_max_stop.unwrap_or(scenario_n_max);
        let step = self.n_max_step.unwrap_or(1);
        if step == 0 || stop < start || start == 0 {
            return Err(ClarqError::Config(format!(
                "invalid sweep range: start {start}, stop {stop}, step {step}"
            )));
        }
        Ok((start, stop, step))
    }
}

/// Grid settings for the SNR × packet-size sensitivity experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    /// Lowest symmetric SNR of the grid, dB.
    pub snr_db_start: f64,
    /// Highest symmetric SNR of the grid, dB (inclusive if on-grid).
    pub snr_db_stop: f64,
    /// Grid pitch, dB; must be positive.
    pub snr_db_step: f64,
    /// Packet sizes to evaluate, bits.
    pub packet_bits: Vec<u32>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            snr_db_start: -16.0,
            snr_db_stop: -8.0,
            snr_db_step: 0.5,
            packet_bits: vec![8, 16, 24, 32],
        }
    }
}

impl SensitivityConfig {
    /// Grid SNRs, validated.
    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        if self.snr_db_step.is_nan() || self.snr_db_step <= 0.0
            || self.snr_db_stop < self.snr_db_start
        {
            return Err(ClarqError::Config(format!(
                "invalid sensitivity grid: [{}, {}] step {}",
                self.snr_db_start, self.snr_db_stop, self.snr_db_step
            )));
        }
        if self.packet_bits.is_empty() || self.packet_bits.contains(&0) {
            return Err(ClarqError::Config(
                "sensitivity packet_bits must be nonempty positive integers".into(),
            ));
        }
        let points =
            ((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9).floor() as usize;
        Ok((0..=points)
            .map(|i| self.snr_db_start + i as f64 * self.snr_db_step)
            .collect())
    }
}

/// Fading model plus campaign size for the Monte Carlo experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingConfig {
    /// Mean SNR before shadowing/fading, dB.
    pub base_snr_db: f64,
    /// Log-normal shadow deviation, dB.
    pub shadow_sigma_db: f64,
    /// Draw the Rayleigh term.
    pub rayleigh: bool,
    /// Rayleigh depth knob, dB.
    pub fading_scale_db: f64,
    /// Draw uplink and downlink independently.
    pub ul_dl_independent: bool,
    /// Number of channel realizations.
    pub runs: u64,
    /// Frame blocklength for the campaign; defaults to the scenario frame.
    pub n_max: Option<u32>,
}

impl Default for FadingConfig {
    fn default() -> Self {
        FadingConfig {
            base_snr_db: 10.0,
            shadow_sigma_db: 3.0,
            rayleigh: true,
            fading_scale_db: 10.0,
            ul_dl_independent: true,
            runs: 5000,
            n_max: None,
        }
    }
}

impl FadingConfig {
    /// Build the validated model.
    pub fn model(&self) -> Result<FadingModel> {
        FadingModel::new(
            self.base_snr_db,
            self.shadow_sigma_db,
            self.rayleigh,
            self.fading_scale_db,
            self.ul_dl_independent,
        )
    }
}

/// Settings for the LUT grid-pitch experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LutResolutionConfig {
    /// Grid pitches to compare, dB.
    pub steps_db: Vec<f64>,
    /// Campaign size per pitch.
    pub runs: u64,
}

impl Default for LutResolutionConfig {
    fn default() -> Self {
        LutResolutionConfig { steps_db: vec![16.0, 8.0, 4.0, 2.0, 1.0], runs: 2000 }
    }
}

/// Settings for the power-control case study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApcCaseConfig {
    /// Available uplink power levels.
    pub power_levels: Vec<f64>,
    /// Worst-case frame energy budget; defaults to the plain schedule's
    /// worst case at the scenario frame.
    pub energy_budget: Option<f64>,
    /// Frames to solve.
    pub n_max_list: Vec<u32>,
}

impl Default for ApcCaseConfig {
    fn default() -> Self {
        ApcCaseConfig {
            power_levels: vec![1.0, 1.25],
            energy_budget: None,
            n_max_list: vec![1200, 1400, 1600, 1800],
        }
    }
}

/// Settings for the protocol simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Number of simulated frames.
    pub frames: u64,
    /// Also write the per-frame outcome log (large for big campaigns).
    pub write_outcomes: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { frames: 100_000, write_outcomes: false }
    }
}

/// A full experiment description. The `experiment` key selects which of
/// the optional sections applies; unused sections may be present (a config
/// file can describe a whole study) but unknown keys anywhere are errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Which experiment to run. Optional in TOML (a config file may hold
    /// only shared settings) because the CLI subcommand always selects it.
    #[serde(default)]
    pub experiment: ExperimentKind,
    /// Root RNG seed for anything stochastic.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; default "results".
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; default: one per available core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Channel/frame selection.
    #[serde(default)]
    pub scenario: ScenarioConfig,
    /// Per-n_max range for sweep_nmax and benchmark.
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Grid for sensitivity_grid.
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    /// Fading model for fading_campaign and lut_resolution.
    #[serde(default)]
    pub fading: FadingConfig,
    /// Pitch list for lut_resolution.
    #[serde(default)]
    pub lut: LutResolutionConfig,
    /// Power-control case study settings.
    #[serde(default)]
    pub apc: ApcCaseConfig,
    /// Protocol-simulation settings.
    #[serde(default)]
    pub simulate: SimulateConfig,
}

impl ExperimentConfig {
    /// Default configuration for one experiment kind.
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            out: None,
            workers: None,
            scenario: ScenarioConfig::default(),
            sweep: SweepConfig::default(),
            sensitivity: SensitivityConfig::default(),
            fading: FadingConfig::default(),
            lut: LutResolutionConfig::default(),
            apc: ApcCaseConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }

    /// Parse a TOML document; parse errors keep toml's line/column info.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ClarqError::Config(e.to_string()))
    }

    /// Load a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ClarqError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Serialize back to TOML (used in metadata sidecars).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ClarqError::Format(e.to_string()))
    }

    /// Output directory, defaulted.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbl::min_blocklength;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"policy\"").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Policy);
        assert_eq!(cfg.seed, 0);
        let sc = cfg.scenario.resolve().unwrap();
        assert_eq!(sc.name, "scenario_a");
        assert_eq!(sc.n_max(), 2500);
    }

    #[test]
    fn unknown_fields_are_rejected_everywhere() {
        assert!(ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\ntypo_field = 1"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\n[scenario]\nsnr = -13.0"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_str(
            "experiment = \"benchmark\"\n[sweep]\nstride = 4"
        )
        .is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        let err = ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\n[scenario\npreset = \"scenario_a\"",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "no line info in: {msg}");
    }

    #[test]
    fn scenario_overrides_apply() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\n\
             [scenario]\n\
             preset = \"scenario_b\"\n\
             packet_bits = 32\n\
             n_max = 1200\n",
        )
        .unwrap();
        let sc = cfg.scenario.resolve().unwrap();
        assert_eq!(sc.name, "scenario_b+overrides");
        assert_eq!(sc.params.packet_bits, 32);
        assert_eq!(sc.n_max(), 1200);
        assert_eq!(sc.ul.snr_linear, 0.07);
    }

    #[test]
    fn snr_override_scales_are_exclusive() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\n\
             [scenario]\n\
             ul_snr_db = -13.0\n\
             ul_snr_linear = 0.05\n",
        )
        .unwrap();
        assert!(matches!(cfg.scenario.resolve(), Err(ClarqError::Config(_))));
    }

    #[test]
    fn feedback_override_shrinks_usable_symbols() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"simulate\"\n[scenario]\nfeedback_time_us = 10.0",
        )
        .unwrap();
        let sc = cfg.scenario.resolve().unwrap();
        assert_eq!(sc.budget.feedback_symbols(), 3);
        assert_eq!(sc.n_max(), 2500);
    }

    #[test]
    fn preset_expansion_is_exact_through_config() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"policy\"\n[scenario]\npreset = \"scenario_b\"",
        )
        .unwrap();
        let sc = cfg.scenario.resolve().unwrap();
        assert_eq!(min_blocklength(&sc.ul, &sc.params), 232);
        assert_eq!(min_blocklength(&sc.dl, &sc.params), 533);
    }

    #[test]
    fn negative_sensitivity_step_is_rejected() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"sensitivity_grid\"\n[sensitivity]\nsnr_db_step = -0.5",
        )
        .unwrap();
        assert!(cfg.sensitivity.snr_grid().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::new(ExperimentKind::FadingCampaign);
        let text = cfg.to_toml().unwrap();
        let reparsed = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(reparsed.experiment, ExperimentKind::FadingCampaign);
        assert_eq!(reparsed.fading.runs, cfg.fading.runs);
    }

    #[test]
    fn sweep_range_validation() {
        let sweep = SweepConfig {
            n_max_start: Some(800),
            n_max_stop: Some(700),
            n_max_step: None,
        };
        assert!(sweep.range(644, 2500).is_err());
        let sweep = SweepConfig::default();
        assert_eq!(sweep.range(644, 2500).unwrap(), (644, 2500, 1));
    }
}
