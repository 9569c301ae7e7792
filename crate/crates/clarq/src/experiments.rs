//! Experiment orchestration: each experiment renders one or more CSV data
//! files plus a JSON metadata sidecar into the output directory.
//!
//! Conventions shared by every experiment:
//!
//! - CSV column names are a stable interface (documented per experiment
//!   below and in the README); plotting is out of scope.
//! - Infeasible cases produce explicit rows with `feasible = false`,
//!   never silent gaps. An experiment whose rows are *all* infeasible
//!   reports [`ExitOutcome::InfeasibleOnly`] (CLI exit code 2).
//! - The sidecar `<experiment>_meta.json` records the experiment label,
//!   seed, code version, the full config echoed as TOML, and the list of
//!   files written. It deliberately carries no timestamp or host data, so
//!   re-running with the sidecar's config and seed reproduces every data
//!   file bit for bit.

use crate::apc::{self, ApcConfig};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::dp::{self, Schedule};
use crate::fading::{run_campaign, Strategy};
use crate::fbl::{self, ChannelSpec, FblParams};
use crate::lut;
use crate::oneshot;
use crate::scenario::Scenario;
use crate::sim;
use crate::{ClarqError, Result};
use std::fs;
use std::path::{Path, PathBuf};

/// How an experiment ended (both are successful runs; the distinction
/// drives the CLI exit code).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitOutcome {
    /// At least one feasible result row was produced.
    Success,
    /// The experiment ran, but every result row was infeasible.
    InfeasibleOnly,
}

/// What a finished experiment produced.
#[derive(Debug)]
pub struct RunArtifacts {
    /// Success / infeasible-only.
    pub outcome: ExitOutcome,
    /// Files written, in creation order (data files, then the sidecar).
    pub files: Vec<PathBuf>,
    /// One-paragraph human summary (printed by the CLI).
    pub summary: String,
}

/// Run the experiment selected by `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let out_dir = cfg.out_dir();
    fs::create_dir_all(&out_dir)?;
    let scenario = cfg.scenario.resolve()?;
    let (outcome, mut files, summary) = match cfg.experiment {
        ExperimentKind::Policy => run_policy(cfg, &scenario, &out_dir)?,
        ExperimentKind::SweepNmax => run_sweep_nmax(cfg, &scenario, &out_dir)?,
        ExperimentKind::Benchmark => run_benchmark(cfg, &scenario, &out_dir)?,
        ExperimentKind::SensitivityGrid => run_sensitivity(cfg, &scenario, &out_dir)?,
        ExperimentKind::FadingCampaign => run_fading(cfg, &scenario, &out_dir)?,
        ExperimentKind::LutResolution => run_lut_resolution(cfg, &scenario, &out_dir)?,
        ExperimentKind::ApcCase => run_apc_case(cfg, &scenario, &out_dir)?,
        ExperimentKind::Simulate => run_simulate(cfg, &scenario, &out_dir)?,
    };
    files.push(write_metadata(cfg, &out_dir, &files)?);
    Ok(RunArtifacts { outcome, files, summary })
}

/// Write the reproducibility sidecar; returns its path.
fn write_metadata(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    files: &[PathBuf],
) -> Result<PathBuf> {
    let path = out_dir.join(format!("{}_meta.json", cfg.experiment.label()));
    let meta = serde_json::json!({
        "experiment": cfg.experiment.label(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_toml": cfg.to_toml()?,
        "outputs": files
            .iter()
            .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect::<Vec<_>>(),
    });
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(path)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

/// Format a float with Rust's shortest round-trip representation — stable
/// and exact, so files are byte-reproducible.
fn num(x: f64) -> String {
    format!("{x}")
}

/// The reduced allocation in display form: `[n^U_1, …, n^U_I, n^D_I]`.
fn schedule_vector(sched: &Schedule) -> String {
    let mut parts: Vec<String> = sched.ul_slots.iter().map(|s| s.to_string()).collect();
    parts.push(sched.final_dl.to_string());
    format!("[{}]", parts.join(", "))
}

// ---------------------------------------------------------------------------
// policy
// ---------------------------------------------------------------------------

/// Files: `policy.bin`, `policy.txt` (the Φ/Ξ tables), `policy_stages.csv`
/// (`stage,n_ul,n_dl,eps_ul,eps_dl`), `policy_summary.csv`
/// (`scenario,n_max,feasible,attempts,ul_slots,final_dl,loop_error,
/// expected_ul_energy,min_ul_energy,max_ul_energy,structure_ok`).
fn run_policy(
    _cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let n_max = sc.n_max();
    let policy = dp::solve_policy(&sc.ul, &sc.dl, &sc.params, n_max);
    let sched = dp::extract_schedule(&policy, n_max);
    let feasible = !sched.is_empty();

    let bin_path = out_dir.join("policy.bin");
    dp::save_policy(&policy, &bin_path)?;
    let txt_path = out_dir.join("policy.txt");
    dp::write_policy_text(&policy, fs::File::create(&txt_path)?)?;

    let stages_path = out_dir.join("policy_stages.csv");
    let mut w = csv_writer(&stages_path)?;
    w.write_record(["stage", "n_ul", "n_dl", "eps_ul", "eps_dl"])?;
    let dl_slots = sched.dl_slots();
    for (i, (&m, &k)) in sched.ul_slots.iter().zip(&dl_slots).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            m.to_string(),
            k.to_string(),
            num(fbl::packet_error_rate(&sc.ul, m, sc.params.packet_bits)),
            num(fbl::packet_error_rate(&sc.dl, k, sc.params.packet_bits)),
        ])?;
    }
    w.flush()?;

    let stats = dp::energy_stats(&sched, &sc.ul, &sc.dl, &sc.params, 1.0);
    let structure_ok = if feasible {
        let symmetric = sc.ul.snr_linear == sc.dl.snr_linear;
        dp::verify_structure(&sched, &policy, symmetric).all_passed()
    } else {
        true
    };
    let summary_path = out_dir.join("policy_summary.csv");
    let mut w = csv_writer(&summary_path)?;
    w.write_record([
        "scenario",
        "n_max",
        "feasible",
        "attempts",
        "ul_slots",
        "final_dl",
        "loop_error",
        "expected_ul_energy",
        "min_ul_energy",
        "max_ul_energy",
        "structure_ok",
    ])?;
    w.write_record([
        sc.name.clone(),
        n_max.to_string(),
        feasible.to_string(),
        sched.attempts().to_string(),
        sched
            .ul_slots
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        sched.final_dl.to_string(),
        num(stats.loop_error),
        num(stats.expected_ul_energy),
        num(stats.min_ul_energy),
        num(stats.max_ul_energy),
        structure_ok.to_string(),
    ])?;
    w.flush()?;

    let summary = if feasible {
        format!(
            "schedule {}, loop error {:.4e}",
            schedule_vector(&sched),
            stats.loop_error
        )
    } else {
        format!(
            "infeasible: n_max {} is below the minimal slot pair {} + {}",
            n_max, policy.n_min_ul, policy.n_min_dl
        )
    };
    let outcome = if feasible { ExitOutcome::Success } else { ExitOutcome::InfeasibleOnly };
    Ok((outcome, vec![bin_path, txt_path, stages_path, summary_path], summary))
}

// ---------------------------------------------------------------------------
// sweep_nmax
// ---------------------------------------------------------------------------

/// File: `sweep_nmax.csv` with columns `n_max,feasible,first_ul_slot,
/// attempts,loop_error,expected_ul_energy,min_ul_energy,max_ul_energy`.
fn run_sweep_nmax(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let minima = fbl::min_blocklength(&sc.ul, &sc.params)
        + fbl::min_blocklength(&sc.dl, &sc.params);
    let (start, stop, step) = cfg.sweep.range(minima.min(sc.n_max()), sc.n_max())?;
    let policy = dp::solve_policy(&sc.ul, &sc.dl, &sc.params, stop);

    let path = out_dir.join("sweep_nmax.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "n_max",
        "feasible",
        "first_ul_slot",
        "attempts",
        "loop_error",
        "expected_ul_energy",
        "min_ul_energy",
        "max_ul_energy",
    ])?;
    let mut feasible_rows = 0u64;
    let mut n = start;
    while n <= stop {
        if n < minima {
            w.write_record([
                n.to_string(),
                "false".into(),
                "0".into(),
                "0".into(),
                "1".into(),
                "0".into(),
                "0".into(),
                "0".into(),
            ])?;
        } else {
            let sched = dp::extract_schedule(&policy, n);
            let stats = dp::energy_stats(&sched, &sc.ul, &sc.dl, &sc.params, 1.0);
            w.write_record([
                n.to_string(),
                "true".into(),
                policy.phi[n as usize].to_string(),
                sched.attempts().to_string(),
                num(stats.loop_error),
                num(stats.expected_ul_energy),
                num(stats.min_ul_energy),
                num(stats.max_ul_energy),
            ])?;
            feasible_rows += 1;
        }
        n = match n.checked_add(step) {
            Some(next) => next,
            None => break,
        };
    }
    w.flush()?;
    let outcome = if feasible_rows > 0 { ExitOutcome::Success } else { ExitOutcome::InfeasibleOnly };
    Ok((
        outcome,
        vec![path],
        format!("swept n_max {start}..={stop} step {step} ({feasible_rows} feasible rows)"),
    ))
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

/// File: `benchmark.csv` with columns
/// `n_max,feasible,optimal_error,naive_error,one_shot_error`.
/// Infeasible frames hold error 1 for every strategy.
fn run_benchmark(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let minima = fbl::min_blocklength(&sc.ul, &sc.params)
        + fbl::min_blocklength(&sc.dl, &sc.params);
    let (start, stop, step) = cfg.sweep.range(minima.min(sc.n_max()), sc.n_max())?;
    let policy = dp::solve_policy(&sc.ul, &sc.dl, &sc.params, stop);

    let path = out_dir.join("benchmark.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["n_max", "feasible", "optimal_error", "naive_error", "one_shot_error"])?;
    let mut feasible_rows = 0u64;
    let mut n = start;
    while n <= stop {
        if n < minima {
            w.write_record([n.to_string(), "false".into(), "1".into(), "1".into(), "1".into()])?;
        } else {
            let optimal = 1.0 - policy.xi[n as usize];
            let naive_sched = oneshot::naive_schedule(&sc.ul, &sc.dl, &sc.params, n);
            let naive = 1.0 - dp::loop_reliability(&naive_sched, &sc.ul, &sc.dl, &sc.params);
            let one_shot = oneshot::solve_one_shot(&sc.ul, &sc.dl, &sc.params, n)
                .map(|s| 1.0 - s.loop_reliability)
                .unwrap_or(1.0);
            w.write_record([
                n.to_string(),
                "true".into(),
                num(optimal),
                num(naive),
                num(one_shot),
            ])?;
            feasible_rows += 1;
        }
        n = match n.checked_add(step) {
            Some(next) => next,
            None => break,
        };
    }
    w.flush()?;
    let outcome = if feasible_rows > 0 { ExitOutcome::Success } else { ExitOutcome::InfeasibleOnly };
    Ok((
        outcome,
        vec![path],
        format!("benchmarked three strategies over n_max {start}..={stop} step {step}"),
    ))
}

// ---------------------------------------------------------------------------
// sensitivity_grid
// ---------------------------------------------------------------------------

/// File: `sensitivity_grid.csv` with columns `snr_db,packet_bits,n_min_ul,
/// n_min_dl,feasible,attempts,first_ul_slot,loop_error`. The grid is
/// symmetric (both directions at the row's SNR); the frame is the
/// scenario's.
fn run_sensitivity(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let snrs = cfg.sensitivity.snr_grid()?;
    let n_max = sc.n_max();
    let path = out_dir.join("sensitivity_grid.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "snr_db",
        "packet_bits",
        "n_min_ul",
        "n_min_dl",
        "feasible",
        "attempts",
        "first_ul_slot",
        "loop_error",
    ])?;
    let mut feasible_rows = 0u64;
    for &snr_db in &snrs {
        let ch = ChannelSpec::from_db(snr_db)?;
        for &bits in &cfg.sensitivity.packet_bits {
            let params = FblParams::new(bits, sc.params.eps_max)?;
            let n_min = fbl::min_blocklength(&ch, &params);
            if n_min.saturating_mul(2) > n_max {
                w.write_record([
                    num(snr_db),
                    bits.to_string(),
                    n_min.to_string(),
                    n_min.to_string(),
                    "false".into(),
                    "0".into(),
                    "0".into(),
                    "1".into(),
                ])?;
                continue;
            }
            let policy = dp::solve_policy(&ch, &ch, &params, n_max);
            let sched = dp::extract_schedule(&policy, n_max);
            w.write_record([
                num(snr_db),
                bits.to_string(),
                n_min.to_string(),
                n_min.to_string(),
                "true".into(),
                sched.attempts().to_string(),
                policy.phi[n_max as usize].to_string(),
                num(1.0 - policy.xi[n_max as usize]),
            ])?;
            feasible_rows += 1;
        }
    }
    w.flush()?;
    let outcome = if feasible_rows > 0 { ExitOutcome::Success } else { ExitOutcome::InfeasibleOnly };
    Ok((
        outcome,
        vec![path],
        format!(
            "sensitivity grid: {} SNRs × {} packet sizes at n_max {n_max}",
            snrs.len(),
            cfg.sensitivity.packet_bits.len()
        ),
    ))
}

// ---------------------------------------------------------------------------
// fading_campaign
// ---------------------------------------------------------------------------

/// Files: `fading_runs.csv` (`run,ul_snr_db,dl_snr_db,optimal_error,
/// one_shot_error,naive_error`) and `fading_aggregates.csv`
/// (`strategy,runs,mean_loop_error`).
fn run_fading(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let model = cfg.fading.model()?;
    let n_max = cfg.fading.n_max.unwrap_or_else(|| sc.n_max());
    let strategies = [Strategy::Optimal, Strategy::OneShot, Strategy::Naive];
    let (records, aggregates) =
        run_campaign(&model, &strategies, &sc.params, n_max, cfg.fading.runs, cfg.seed)?;

    let runs_path = out_dir.join("fading_runs.csv");
    let mut w = csv_writer(&runs_path)?;
    w.write_record([
        "run",
        "ul_snr_db",
        "dl_snr_db",
        "optimal_error",
        "one_shot_error",
        "naive_error",
    ])?;
    for r in &records {
        w.write_record([
            r.run.to_string(),
            num(r.ul_snr_db),
            num(r.dl_snr_db),
            num(r.errors[0]),
            num(r.errors[1]),
            num(r.errors[2]),
        ])?;
    }
    w.flush()?;

    let agg_path = out_dir.join("fading_aggregates.csv");
    let mut w = csv_writer(&agg_path)?;
    w.write_record(["strategy", "runs", "mean_loop_error"])?;
    for a in &aggregates {
        w.write_record([a.strategy.clone(), a.runs.to_string(), num(a.mean_loop_error)])?;
    }
    w.flush()?;

    // Infeasible-only when even the optimal strategy lost every run.
    let all_infeasible = aggregates[0].per_run_errors.iter().all(|&e| e == 1.0);
    let outcome = if all_infeasible { ExitOutcome::InfeasibleOnly } else { ExitOutcome::Success };
    let summary = aggregates
        .iter()
        .map(|a| format!("{} {:.4e}", a.strategy, a.mean_loop_error))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((
        outcome,
        vec![runs_path, agg_path],
        format!("{} runs, mean loop error: {summary}", cfg.fading.runs),
    ))
}

// ---------------------------------------------------------------------------
// lut_resolution
// ---------------------------------------------------------------------------

/// File: `lut_resolution.csv` with columns `kind,step_db,mean_loop_error`;
/// `kind` is `lut` for table-driven rows and `exact` (step 0) for the
/// per-draw exact-solver floor on the same seeds.
fn run_lut_resolution(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let model = cfg.fading.model()?;
    let n_max = cfg.fading.n_max.unwrap_or_else(|| sc.n_max());
    let table = lut::resolution_experiment(
        &cfg.lut.steps_db,
        &model,
        &sc.params,
        n_max,
        cfg.lut.runs,
        cfg.seed,
    )?;

    let path = out_dir.join("lut_resolution.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["kind", "step_db", "mean_loop_error"])?;
    for row in &table.rows {
        w.write_record(["lut".into(), num(row.step_db), num(row.mean_loop_error)])?;
    }
    w.write_record(["exact".into(), "0".into(), num(table.exact_mean_loop_error)])?;
    w.flush()?;

    let all_infeasible = table.exact_mean_loop_error == 1.0
        && table.rows.iter().all(|r| r.mean_loop_error == 1.0);
    let outcome = if all_infeasible { ExitOutcome::InfeasibleOnly } else { ExitOutcome::Success };
    Ok((
        outcome,
        vec![path],
        format!(
            "{} grid pitches over {} runs; exact floor {:.4e}",
            table.rows.len(),
            cfg.lut.runs,
            table.exact_mean_loop_error
        ),
    ))
}

// ---------------------------------------------------------------------------
// apc_case
// ---------------------------------------------------------------------------

/// File: `apc_case.csv` with columns `n_max,mode,feasible,attempts,
/// loop_error,expected_ul_energy,worst_case_energy,stages`; `mode` is
/// `with_apc` or `without_apc`, and `stages` lists `(n_ul,n_dl,power)`
/// tuples in transmission order.
fn run_apc_case(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    // Default budget: the plain schedule's worst case at the scenario frame.
    let budget = match cfg.apc.energy_budget {
        Some(b) => b,
        None => {
            let (_, stats) = apc::baseline_without_apc(&sc.ul, &sc.dl, &sc.params, sc.n_max());
            stats.max_ul_energy
        }
    };
    if cfg.apc.n_max_list.is_empty() {
        return Err(ClarqError::Config("apc.n_max_list must be nonempty".into()));
    }

    let path = out_dir.join("apc_case.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "n_max",
        "mode",
        "feasible",
        "attempts",
        "loop_error",
        "expected_ul_energy",
        "worst_case_energy",
        "stages",
    ])?;
    let mut feasible_rows = 0u64;
    for &n_max in &cfg.apc.n_max_list {
        let apc_cfg = ApcConfig::new(cfg.apc.power_levels.clone(), budget, n_max)?;
        match apc::solve_apc(&sc.ul, &sc.dl, &sc.params, &apc_cfg) {
            Ok((sched, stats)) => {
                let stages = sched
                    .stages
                    .iter()
                    .map(|s| format!("({},{},{})", s.n_ul, s.n_dl, s.power))
                    .collect::<Vec<_>>()
                    .join(" ");
                w.write_record([
                    n_max.to_string(),
                    "with_apc".into(),
                    "true".into(),
                    sched.attempts().to_string(),
                    num(stats.loop_error),
                    num(stats.expected_ul_energy),
                    num(sched.worst_case_energy()),
                    stages,
                ])?;
                feasible_rows += 1;
            }
            Err(ClarqError::Infeasible(_)) => {
                w.write_record([
                    n_max.to_string(),
                    "with_apc".into(),
                    "false".into(),
                    "0".into(),
                    "1".into(),
                    "0".into(),
                    "0".into(),
                    String::new(),
                ])?;
            }
            Err(e) => return Err(e),
        }

        let (plain, plain_stats) = apc::baseline_without_apc(&sc.ul, &sc.dl, &sc.params, n_max);
        if plain.is_empty() {
            w.write_record([
                n_max.to_string(),
                "without_apc".into(),
                "false".into(),
                "0".into(),
                "1".into(),
                "0".into(),
                "0".into(),
                String::new(),
            ])?;
        } else {
            let dl_slots = plain.dl_slots();
            let stages = plain
                .ul_slots
                .iter()
                .zip(&dl_slots)
                .map(|(&m, &k)| format!("({m},{k},1)"))
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([
                n_max.to_string(),
                "without_apc".into(),
                "true".into(),
                plain.attempts().to_string(),
                num(plain_stats.loop_error),
                num(plain_stats.expected_ul_energy),
                num(plain_stats.max_ul_energy),
                stages,
            ])?;
            feasible_rows += 1;
        }
    }
    w.flush()?;
    let outcome = if feasible_rows > 0 { ExitOutcome::Success } else { ExitOutcome::InfeasibleOnly };
    Ok((
        outcome,
        vec![path],
        format!(
            "power-control case study at {} frames, budget {budget}",
            cfg.apc.n_max_list.len()
        ),
    ))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Files: `simulate_summary.csv` (one row:
/// `frames,feasible,loop_successes,empirical_reliability,
/// empirical_loop_error,analytic_loop_error,mean_ul_symbols,
/// analytic_mean_ul_symbols,var_ul_symbols,max_elapsed_us`),
/// `simulate_histogram.csv` (`ul_attempts,frames`), and optionally
/// `simulate_outcomes.csv` (per-frame log, when `simulate.write_outcomes`).
fn run_simulate(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    out_dir: &Path,
) -> Result<(ExitOutcome, Vec<PathBuf>, String)> {
    let n_max = sc.n_max();
    let policy = dp::solve_policy(&sc.ul, &sc.dl, &sc.params, n_max);
    let sched = dp::extract_schedule(&policy, n_max);
    let summary_path = out_dir.join("simulate_summary.csv");

    if sched.is_empty() {
        let mut w = csv_writer(&summary_path)?;
        w.write_record(["frames", "feasible"])?;
        w.write_record([cfg.simulate.frames.to_string(), "false".into()])?;
        w.flush()?;
        return Ok((
            ExitOutcome::InfeasibleOnly,
            vec![summary_path],
            format!("infeasible: no schedule fits n_max {n_max}"),
        ));
    }

    let analytic = dp::energy_stats(&sched, &sc.ul, &sc.dl, &sc.params, 1.0);
    let sim_cfg = sim::SimConfig {
        frames: cfg.simulate.frames,
        seed: cfg.seed,
        source: sim::ScheduleSource::Policy(policy),
        budget: sc.budget,
    };
    let mut files = Vec::new();
    let summary = if cfg.simulate.write_outcomes {
        let outcomes_path = out_dir.join("simulate_outcomes.csv");
        let mut outcomes = Vec::with_capacity(cfg.simulate.frames as usize);
        let summary =
            sim::run_frames_with(&sim_cfg, &sc.ul, &sc.dl, &sc.params, |o| {
                outcomes.push(*o);
            })?;
        sim::write_outcomes_csv(outcomes, fs::File::create(&outcomes_path)?)?;
        files.push(outcomes_path);
        summary
    } else {
        sim::run_frames(&sim_cfg, &sc.ul, &sc.dl, &sc.params)?
    };

    let mut w = csv_writer(&summary_path)?;
    w.write_record([
        "frames",
        "feasible",
        "loop_successes",
        "empirical_reliability",
        "empirical_loop_error",
        "analytic_loop_error",
        "mean_ul_symbols",
        "analytic_mean_ul_symbols",
        "var_ul_symbols",
        "max_elapsed_us",
    ])?;
    w.write_record([
        summary.frames.to_string(),
        "true".into(),
        summary.loop_successes.to_string(),
        num(summary.empirical_reliability),
        num(summary.empirical_loop_error),
        num(analytic.loop_error),
        num(summary.mean_ul_symbols),
        num(analytic.expected_ul_energy),
        num(summary.var_ul_symbols),
        num(summary.max_elapsed_time * 1e6),
    ])?;
    w.flush()?;
    files.insert(0, summary_path);

    let hist_path = out_dir.join("simulate_histogram.csv");
    let mut w = csv_writer(&hist_path)?;
    w.write_record(["ul_attempts", "frames"])?;
    for (attempts, count) in summary.attempt_histogram.iter().enumerate() {
        if *count > 0 {
            w.write_record([attempts.to_string(), count.to_string()])?;
        }
    }
    w.flush()?;
    files.push(hist_path);

    Ok((
        ExitOutcome::Success,
        files,
        format!(
            "{} frames: empirical loop error {:.4e} (analytic {:.4e})",
            summary.frames, summary.empirical_loop_error, analytic.loop_error
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};
    use tempfile::tempdir;

    fn cfg_in(dir: &Path, kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.out = Some(dir.to_path_buf());
        cfg
    }

    fn read(path: &Path) -> String {
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn policy_writes_reference_artifacts() {
        let dir = tempdir().unwrap();
        let arts = run_experiment(&cfg_in(dir.path(), ExperimentKind::Policy)).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        assert!(arts.summary.contains("[902, 674, 462, 462]"));
        let summary = read(&dir.path().join("policy_summary.csv"));
        assert!(summary.contains("902 674 462"));
        assert!(summary.contains("true"));
        let stages = read(&dir.path().join("policy_stages.csv"));
        assert_eq!(stages.lines().count(), 4); // header + 3 stages
        let policy = dp::load_policy(&dir.path().join("policy.bin")).unwrap();
        assert_eq!(policy.phi[2500], 902);
        let meta = read(&dir.path().join("policy_meta.json"));
        assert!(meta.contains("\"experiment\": \"policy\""));
        assert!(!meta.to_lowercase().contains("time"));
    }

    #[test]
    fn policy_infeasible_scenario_reports_exit_two() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::Policy);
        cfg.scenario.n_max = Some(600);
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::InfeasibleOnly);
        assert!(read(&dir.path().join("policy_summary.csv")).contains("false"));
    }

    #[test]
    fn sweep_covers_range_with_explicit_rows() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::SweepNmax);
        cfg.sweep.n_max_start = Some(640); // below the 644 floor
        cfg.sweep.n_max_stop = Some(1000);
        cfg.sweep.n_max_step = Some(4);
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("sweep_nmax.csv"));
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n_max,feasible,first_ul_slot,attempts,loop_error,expected_ul_energy,min_ul_energy,max_ul_energy"
        );
        assert!(text.contains("640,false"));
        assert!(text.contains("924,true,462,"));
    }

    #[test]
    fn benchmark_rows_keep_strategy_ordering() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::Benchmark);
        cfg.sweep.n_max_start = Some(700);
        cfg.sweep.n_max_stop = Some(1500);
        cfg.sweep.n_max_step = Some(50);
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("benchmark.csv"));
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let optimal: f64 = cols[2].parse().unwrap();
            let naive: f64 = cols[3].parse().unwrap();
            let one_shot: f64 = cols[4].parse().unwrap();
            assert!(optimal <= naive + 1e-15 && naive <= one_shot + 1e-15, "{line}");
        }
    }

    #[test]
    fn sensitivity_grid_emits_infeasible_cells() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::SensitivityGrid);
        cfg.sensitivity.snr_db_start = -22.0;
        cfg.sensitivity.snr_db_stop = -12.0;
        cfg.sensitivity.snr_db_step = 2.0;
        cfg.sensitivity.packet_bits = vec![16, 32];
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("sensitivity_grid.csv"));
        assert!(text.contains(",false,"), "no infeasible cells:\n{text}");
        assert!(text.contains(",true,"), "no feasible cells:\n{text}");
    }

    #[test]
    fn fading_campaign_writes_runs_and_aggregates() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::FadingCampaign);
        cfg.fading.runs = 60;
        cfg.fading.n_max = Some(600);
        cfg.seed = 5;
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let runs = read(&dir.path().join("fading_runs.csv"));
        assert_eq!(runs.lines().count(), 61);
        let agg = read(&dir.path().join("fading_aggregates.csv"));
        assert!(agg.contains("optimal,60,"));
        assert!(agg.contains("one_shot,60,"));
        assert!(agg.contains("naive,60,"));
    }

    #[test]
    fn lut_resolution_reports_floor_row() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::LutResolution);
        cfg.lut.steps_db = vec![8.0, 2.0];
        cfg.lut.runs = 40;
        cfg.fading.n_max = Some(600);
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("lut_resolution.csv"));
        assert!(text.contains("lut,8,"));
        assert!(text.contains("lut,2,"));
        assert!(text.contains("exact,0,"));
    }

    #[test]
    fn apc_case_writes_paired_rows() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::ApcCase);
        cfg.apc.n_max_list = vec![1400];
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("apc_case.csv"));
        assert!(text.contains("1400,with_apc,true,3,"));
        assert!(text.contains("(469,931,1.25) (350,581,1.25) (259,322,1.25)"));
        assert!(text.contains("1400,without_apc,true,"));
    }

    #[test]
    fn simulate_writes_summary_and_histogram() {
        let dir = tempdir().unwrap();
        let mut cfg = cfg_in(dir.path(), ExperimentKind::Simulate);
        cfg.scenario.n_max = Some(1200);
        cfg.simulate.frames = 20_000;
        cfg.simulate.write_outcomes = false;
        cfg.seed = 9;
        let arts = run_experiment(&cfg).unwrap();
        assert_eq!(arts.outcome, ExitOutcome::Success);
        let text = read(&dir.path().join("simulate_summary.csv"));
        assert!(text.contains("20000,true,"));
        let hist = read(&dir.path().join("simulate_histogram.csv"));
        assert!(hist.lines().count() >= 2);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        for (dir, _) in [(&dir_a, 0), (&dir_b, 1)] {
            let mut cfg = cfg_in(dir.path(), ExperimentKind::FadingCampaign);
            cfg.fading.runs = 50;
            cfg.fading.n_max = Some(600);
            cfg.seed = 77;
            run_experiment(&cfg).unwrap();
        }
        let a = read(&dir_a.path().join("fading_runs.csv"));
        let b = read(&dir_b.path().join("fading_runs.csv"));
        assert_eq!(a, b);
    }
}
