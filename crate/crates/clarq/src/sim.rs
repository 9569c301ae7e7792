//! Discrete-event simulation of the closed-loop ARQ protocol.
//!
//! Each frame plays the protocol: transmit an uplink slot, receive perfect
//! ACK/NACK feedback (costing `T_f`), either transmit the downlink in the
//! reserved remainder (on ACK) or re-split the remainder for another uplink
//! attempt (on NACK), until the remainder can no longer host both slot
//! minima. Packet failures are independent Bernoulli events with the
//! analytic finite-blocklength error probability of the transmitted slot
//! length — the channel itself is block-constant over a frame.
//!
//! Randomness is counter-based: one ChaCha stream per frame, derived from
//! `(seed, frame_index)`, so outcomes are bit-reproducible and independent
//! of execution order or worker count.
//!
//! Because the slot chosen at each stage depends only on the remaining
//! blocklength — never on the random outcomes — every schedule source
//! collapses to a deterministic *attempt ladder* computed once per run;
//! frames then just walk the ladder with Bernoulli draws.
//!
//! When a policy built for zero feedback time drives a simulation with
//! `T_f > 0`, every feedback period is charged to the remaining-blocklength
//! index as `ceil(T_f / T_S)` whole symbols *before* the lookup it
//! precedes: the first uplink looks up at `n_max − ceil(T_f/T_S)` (its ACK
//! must fit), and each retransmission reduces the index by the failed slot
//! plus another feedback charge. This conservative reduction (a documented
//! approximation — the policy itself is not re-optimized for the feedback
//! cost) makes the symbol index an upper bound on remaining wall time and
//! thereby preserves the hard latency guarantee.
//!
//! The final downlink ACK is not charged against the frame: the loop is
//! complete once the downlink slot lands, and the deadline applies to the
//! data exchange. This is a deliberate, documented modeling choice.

use crate::dp::{DpPolicy, Schedule};
use crate::fbl::{self, ChannelSpec, FblParams, FrameBudget};
use crate::oneshot;
use crate::{ClarqError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

/// Where each stage's uplink slot length comes from.
#[derive(Debug, Clone)]
pub enum ScheduleSource {
    /// Replay a fixed schedule as-given.
    Fixed(Schedule),
    /// Follow a policy's Φ table on the remaining blocklength.
    Policy(DpPolicy),
    /// Greedy equal-error re-split of the remaining blocklength.
    NaiveGreedy,
}

/// Simulation run description.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Number of frames to simulate (≥ 1).
    pub frames: u64,
    /// Master seed; frame `k` uses the ChaCha stream `k` under this seed.
    pub seed: u64,
    /// Slot-length source.
    pub source: ScheduleSource,
    /// Frame timing (deadline, symbol time, feedback time).
    pub budget: FrameBudget,
}

/// What happened in one simulated frame.
///
/// Invariants: `dl_success` implies `ul_success`; `elapsed_time` never
/// exceeds the frame deadline; `ul_symbols` is the sum of the uplink slots
/// actually transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameOutcome {
    /// Frame counter, also the RNG stream index.
    pub frame_index: u64,
    /// Uplink attempts transmitted (0 when no transmission fits).
    pub ul_attempts: u32,
    /// Whether any uplink attempt was acknowledged.
    pub ul_success: bool,
    /// Whether the downlink landed (requires `ul_success`).
    pub dl_success: bool,
    /// Total uplink symbols spent.
    pub ul_symbols: u32,
    /// Wall time consumed inside the frame, seconds, including feedback.
    pub elapsed_time: f64,
}

/// Aggregate statistics over a simulated frame stream.
#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    /// Frames simulated.
    pub frames: u64,
    /// Frames whose loop closed (downlink landed).
    pub loop_successes: u64,
    /// `loop_successes / frames`.
    pub empirical_reliability: f64,
    /// `1 − empirical_reliability`.
    pub empirical_loop_error: f64,
    /// Mean uplink symbols per frame.
    pub mean_ul_symbols: f64,
    /// Sample variance of uplink symbols per frame.
    pub var_ul_symbols: f64,
    /// Frames per attempt count; index `i` holds frames with exactly `i`
    /// uplink attempts.
    pub attempt_histogram: Vec<u64>,
    /// Exact distribution of uplink symbols spent (value → frames).
    pub ul_symbol_counts: BTreeMap<u32, u64>,
    /// Longest frame observed, seconds.
    pub max_elapsed_time: f64,
}

impl SimSummary {
    /// Smallest uplink-symbol value at or above the given quantile
    /// `q ∈ [0, 1]` of the per-frame distribution.
    pub fn ul_symbols_percentile(&self, q: f64) -> u32 {
        let target = (q.clamp(0.0, 1.0) * self.frames as f64).ceil() as u64;
        let mut seen = 0u64;
        for (&symbols, &count) in &self.ul_symbol_counts {
            seen += count;
            if seen >= target {
                return symbols;
            }
        }
        self.ul_symbol_counts.keys().next_back().copied().unwrap_or(0)
    }
}

/// One rung of the deterministic attempt ladder: the slot pair stage `i`
/// transmits and the error probabilities the draws use.
#[derive(Debug, Clone, Copy)]
struct LadderStage {
    ul_slot: u32,
    dl_slot: u32,
    eps_ul: f64,
    eps_dl: f64,
}

/// Materialize the attempt ladder for a schedule source.
///
/// The passed channels are the ground truth that generates errors; for a
/// policy source they may legitimately differ from the channels the policy
/// was built for (that mismatch is exactly what quantized-table deployments
/// experience).
fn build_ladder(
    cfg: &SimConfig,
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
) -> Result<Vec<LadderStage>> {
    let d = params.packet_bits;
    let n_max = cfg.budget.n_max();
    let fb_symbols = cfg.budget.feedback_symbols();
    let stage = |u: u32, dl_len: u32| LadderStage {
        ul_slot: u,
        dl_slot: dl_len,
        eps_ul: fbl::packet_error_rate(ul, u, d),
        eps_dl: fbl::packet_error_rate(dl, dl_len, d),
    };

    match &cfg.source {
        ScheduleSource::Fixed(sched) => {
            if sched.is_empty() {
                return Err(ClarqError::Config(
                    "fixed schedule is empty; nothing to simulate".into(),
                ));
            }
            // Worst-case wall time: the full frame of symbols plus one
            // feedback per uplink attempt.
            let worst = sched.n_max() as f64 * cfg.budget.symbol_time
                + sched.attempts() as f64 * cfg.budget.feedback_time;
            if sched.n_max() > n_max || worst > cfg.budget.frame_time * (1.0 + 1e-12) {
                return Err(ClarqError::Config(format!(
                    "schedule spans {} symbols / {worst:.6e} s but the frame allows \
                     {n_max} symbols / {:.6e} s",
                    sched.n_max(),
                    cfg.budget.frame_time
                )));
            }
            Ok(sched
                .ul_slots
                .iter()
                .zip(sched.dl_slots())
                .map(|(&u, dl_len)| stage(u, dl_len))
                .collect())
        }
        ScheduleSource::Policy(policy) => {
            if policy.n_max < n_max {
                return Err(ClarqError::Config(format!(
                    "policy covers n ≤ {} but the frame budget is {n_max}",
                    policy.n_max
                )));
            }
            let first_feasible = policy.n_min_ul + policy.n_min_dl;
            let mut ladder = Vec::new();
            // Reserve the current attempt's feedback before each lookup, so
            // the index never promises symbols the feedback will consume.
            let mut remaining = n_max.saturating_sub(fb_symbols);
            while remaining >= first_feasible {
                let m = policy.phi[remaining as usize];
                ladder.push(stage(m, remaining - m));
                remaining = remaining.saturating_sub(m + fb_symbols);
            }
            Ok(ladder)
        }
        ScheduleSource::NaiveGreedy => {
            let n_min_ul = fbl::min_blocklength(ul, params);
            let n_min_dl = fbl::min_blocklength(dl, params);
            let mut ladder = Vec::new();
            let mut remaining = n_max.saturating_sub(fb_symbols);
            while remaining >= n_min_ul + n_min_dl {
                let m = oneshot::naive_clarq_policy(ul, dl, params, remaining)
                    .expect("feasibility just checked");
                ladder.push(stage(m, remaining - m));
                remaining = remaining.saturating_sub(m + fb_symbols);
            }
            Ok(ladder)
        }
    }
}

/// Play one frame against the ladder using the frame's own RNG stream.
fn play_frame(
    ladder: &[LadderStage],
    budget: &FrameBudget,
    seed: u64,
    frame_index: u64,
) -> FrameOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);

    let mut ul_symbols = 0u32;
    let mut elapsed = 0.0f64;
    let mut attempts = 0u32;
    for stage in ladder {
        attempts += 1;
        ul_symbols += stage.ul_slot;
        elapsed += stage.ul_slot as f64 * budget.symbol_time + budget.feedback_time;
        // u < ε is a packet failure; ε = 0 can never fail, ε = 1 never
        // succeeds.
        if rng.gen::<f64>() < stage.eps_ul {
            continue;
        }
        let dl_ok = rng.gen::<f64>() >= stage.eps_dl;
        elapsed += stage.dl_slot as f64 * budget.symbol_time;
        return FrameOutcome {
            frame_index,
            ul_attempts: attempts,
            ul_success: true,
            dl_success: dl_ok,
            ul_symbols,
            elapsed_time: elapsed,
        };
    }
    FrameOutcome {
        frame_index,
        ul_attempts: attempts,
        ul_success: false,
        dl_success: false,
        ul_symbols,
        elapsed_time: elapsed,
    }
}

/// Streaming accumulator; merging two accumulators of disjoint frame sets
/// is associative, which is what makes parallel execution exact.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    frames: u64,
    successes: u64,
    sum_symbols: f64,
    sum_symbols_sq: f64,
    attempt_histogram: Vec<u64>,
    ul_symbol_counts: BTreeMap<u32, u64>,
    max_elapsed: f64,
}

impl Accumulator {
    fn push(&mut self, outcome: &FrameOutcome) {
        self.frames += 1;
        self.successes += outcome.dl_success as u64;
        self.sum_symbols += outcome.ul_symbols as f64;
        self.sum_symbols_sq += (outcome.ul_symbols as f64).powi(2);
        let idx = outcome.ul_attempts as usize;
        if self.attempt_histogram.len() <= idx {
            self.attempt_histogram.resize(idx + 1, 0);
        }
        self.attempt_histogram[idx] += 1;
        *self.ul_symbol_counts.entry(outcome.ul_symbols).or_insert(0) += 1;
        self.max_elapsed = self.max_elapsed.max(outcome.elapsed_time);
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.frames += other.frames;
        self.successes += other.successes;
        self.sum_symbols += other.sum_symbols;
        self.sum_symbols_sq += other.sum_symbols_sq;
        if self.attempt_histogram.len() < other.attempt_histogram.len() {
            self.attempt_histogram.resize(other.attempt_histogram.len(), 0);
        }
        for (i, c) in other.attempt_histogram.iter().enumerate() {
            self.attempt_histogram[i] += c;
        }
        for (symbols, count) in other.ul_symbol_counts {
            *self.ul_symbol_counts.entry(symbols).or_insert(0) += count;
        }
        self.max_elapsed = self.max_elapsed.max(other.max_elapsed);
        self
    }

    fn finish(self) -> SimSummary {
        let n = self.frames as f64;
        let mean = self.sum_symbols / n;
        // Unbiased sample variance via the sum of squares.
        let var = if self.frames > 1 {
            (self.sum_symbols_sq - n * mean * mean) / (n - 1.0)
        } else {
            0.0
        };
        SimSummary {
            frames: self.frames,
            loop_successes: self.successes,
            empirical_reliability: self.successes as f64 / n,
            empirical_loop_error: 1.0 - self.successes as f64 / n,
            mean_ul_symbols: mean,
            var_ul_symbols: var.max(0.0),
            attempt_histogram: self.attempt_histogram,
            ul_symbol_counts: self.ul_symbol_counts,
            max_elapsed_time: self.max_elapsed,
        }
    }
}

/// Simulate `cfg.frames` frames in parallel and return the summary.
///
/// Errors: a schedule that cannot fit the frame budget is a configuration
/// error raised before any frame runs. Results are bit-identical for any
/// worker count and rerun (counter-based per-frame streams plus an
/// associative reducer).
pub fn run_frames(
    cfg: &SimConfig,
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
) -> Result<SimSummary> {
    if cfg.frames == 0 {
        return Err(ClarqError::Config("frames must be ≥ 1".into()));
    }
    let ladder = build_ladder(cfg, ul, dl, params)?;
    let accumulator = (0..cfg.frames)
        .into_par_iter()
        .fold(Accumulator::default, |mut acc, frame_index| {
            acc.push(&play_frame(&ladder, &cfg.budget, cfg.seed, frame_index));
            acc
        })
        .reduce(Accumulator::default, Accumulator::merge);
    Ok(accumulator.finish())
}

/// Simulate sequentially, handing every outcome to `sink` in frame order
/// (CSV dumps, custom statistics); returns the same summary as
/// [`run_frames`] for the same config.
pub fn run_frames_with<F: FnMut(&FrameOutcome)>(
    cfg: &SimConfig,
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    mut sink: F,
) -> Result<SimSummary> {
    if cfg.frames == 0 {
        return Err(ClarqError::Config("frames must be ≥ 1".into()));
    }
    let ladder = build_ladder(cfg, ul, dl, params)?;
    let mut acc = Accumulator::default();
    for frame_index in 0..cfg.frames {
        let outcome = play_frame(&ladder, &cfg.budget, cfg.seed, frame_index);
        sink(&outcome);
        acc.push(&outcome);
    }
    Ok(acc.finish())
}

/// Write an outcome stream as CSV with the stable column set
/// `frame_index, ul_attempts, ul_success, dl_success, ul_symbols, elapsed_us`.
pub fn write_outcomes_csv<W: Write>(
    outcomes: impl IntoIterator<Item = FrameOutcome>,
    writer: W,
) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer
        .write_record([
            "frame_index",
            "ul_attempts",
            "ul_success",
            "dl_success",
            "ul_symbols",
            "elapsed_us",
        ])
        .map_err(|e| ClarqError::Format(e.to_string()))?;
    for o in outcomes {
        csv_writer
            .write_record([
                o.frame_index.to_string(),
                o.ul_attempts.to_string(),
                (o.ul_success as u8).to_string(),
                (o.dl_success as u8).to_string(),
                o.ul_symbols.to_string(),
                format!("{:.3}", o.elapsed_time * 1e6),
            ])
            .map_err(|e| ClarqError::Format(e.to_string()))?;
    }
    csv_writer
        .flush()
        .map_err(ClarqError::Io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{energy_stats, extract_schedule, solve_policy};

    fn params() -> FblParams {
        FblParams::new(16, 0.2).unwrap()
    }

    fn symmetric() -> ChannelSpec {
        ChannelSpec::from_linear(0.05).unwrap()
    }

    fn budget_2500() -> FrameBudget {
        FrameBudget::new(10e-3, 4e-6, 0.0).unwrap()
    }

    fn budget_for(n_max: u32) -> FrameBudget {
        FrameBudget::new(n_max as f64 * 4e-6, 4e-6, 0.0).unwrap()
    }

    #[test]
    fn error_free_channel_always_one_attempt() {
        // Enormous SNR: ε underflows to exactly 0 for every slot in range.
        let perfect = ChannelSpec::from_linear(1e12).unwrap();
        let cfg = SimConfig {
            frames: 500,
            seed: 7,
            source: ScheduleSource::NaiveGreedy,
            budget: budget_2500(),
        };
        let mut attempts_seen = Vec::new();
        let summary = run_frames_with(&cfg, &perfect, &perfect, &params(), |o| {
            attempts_seen.push(o.ul_attempts);
            assert!(o.dl_success && o.ul_success);
        })
        .unwrap();
        assert!(attempts_seen.iter().all(|&a| a == 1));
        assert_eq!(summary.loop_successes, 500);
        assert_eq!(summary.empirical_loop_error, 0.0);
    }

    #[test]
    fn deterministic_across_runs_and_workers() {
        let ch = symmetric();
        let policy = solve_policy(&ch, &ch, &params(), 1200);
        let cfg = SimConfig {
            frames: 20_000,
            seed: 42,
            source: ScheduleSource::Policy(policy),
            budget: budget_for(1200),
        };
        let parallel_a = run_frames(&cfg, &ch, &ch, &params()).unwrap();
        let parallel_b = run_frames(&cfg, &ch, &ch, &params()).unwrap();
        let sequential = run_frames_with(&cfg, &ch, &ch, &params(), |_| {}).unwrap();
        assert_eq!(parallel_a.loop_successes, parallel_b.loop_successes);
        assert_eq!(parallel_a.loop_successes, sequential.loop_successes);
        assert_eq!(parallel_a.attempt_histogram, sequential.attempt_histogram);
        assert_eq!(parallel_a.ul_symbol_counts, sequential.ul_symbol_counts);
        assert_eq!(parallel_a.mean_ul_symbols, sequential.mean_ul_symbols);
    }

    #[test]
    fn empirical_matches_analytic_at_moderate_reliability() {
        // n_max = 1200 sits at loop error ≈ 8.6e-3: resolvable quickly.
        let ch = symmetric();
        let p = params();
        let policy = solve_policy(&ch, &ch, &p, 1200);
        let sched = extract_schedule(&policy, 1200);
        let analytic = crate::dp::loop_reliability(&sched, &ch, &ch, &p);
        let frames = 200_000u64;
        let cfg = SimConfig {
            frames,
            seed: 11,
            source: ScheduleSource::Fixed(sched.clone()),
            budget: budget_for(1200),
        };
        let summary = run_frames(&cfg, &ch, &ch, &p).unwrap();
        let sigma = (analytic * (1.0 - analytic) / frames as f64).sqrt();
        assert!(
            (summary.empirical_reliability - analytic).abs() <= 3.0 * sigma,
            "empirical {} vs analytic {analytic} (3σ = {:.2e})",
            summary.empirical_reliability,
            3.0 * sigma
        );
        // Mean uplink symbols within 3σ of the analytic expectation.
        let stats = energy_stats(&sched, &ch, &ch, &p, 1.0);
        let se = (summary.var_ul_symbols / frames as f64).sqrt();
        assert!(
            (summary.mean_ul_symbols - stats.expected_ul_energy).abs() <= 3.0 * se,
            "mean symbols {} vs expected {}",
            summary.mean_ul_symbols,
            stats.expected_ul_energy
        );
    }

    #[test]
    fn attempt_histogram_matches_analytic_distribution() {
        let ch = symmetric();
        let p = params();
        let policy = solve_policy(&ch, &ch, &p, 924);
        let sched = extract_schedule(&policy, 924);
        assert_eq!(sched.attempts(), 1); // 924 is a single-stage budget
        // Use a wider frame for 2 stages.
        let policy = solve_policy(&ch, &ch, &p, 1400);
        let sched = extract_schedule(&policy, 1400);
        assert!(sched.attempts() >= 2);
        let frames = 300_000u64;
        let cfg = SimConfig {
            frames,
            seed: 3,
            source: ScheduleSource::Fixed(sched.clone()),
            budget: budget_for(1400),
        };
        let summary = run_frames(&cfg, &ch, &ch, &p).unwrap();
        // P(attempts = i): first i−1 uplink slots fail, attempt i ends the
        // loop (success or ladder exhaustion at i = I).
        let eps: Vec<f64> = sched
            .ul_slots
            .iter()
            .map(|&m| fbl::packet_error_rate(&ch, m, 16))
            .collect();
        let mut prefix = 1.0;
        for (i, &e) in eps.iter().enumerate() {
            let analytic = if i + 1 < eps.len() { prefix * (1.0 - e) } else { prefix };
            let observed = summary
                .attempt_histogram
                .get(i + 1)
                .copied()
                .unwrap_or(0) as f64
                / frames as f64;
            let sigma = (analytic * (1.0 - analytic) / frames as f64).sqrt();
            assert!(
                (observed - analytic).abs() <= 4.0 * sigma.max(1e-9),
                "attempts = {}: observed {observed}, analytic {analytic}",
                i + 1
            );
            prefix *= e;
        }
    }

    #[test]
    fn huge_feedback_forbids_retransmission() {
        // T_f of half the frame: after reserving the first ACK only 1250
        // symbols remain, and after one failed uplink the reduced index
        // can't host another stage. The greedy source therefore degenerates
        // to the one-shot split of the effective budget, and empirical
        // reliability matches that one-shot analytic value.
        let ch = symmetric();
        let p = params();
        let budget = FrameBudget::new(10e-3, 4e-6, 5e-3).unwrap();
        let cfg = SimConfig {
            frames: 150_000,
            seed: 5,
            source: ScheduleSource::NaiveGreedy,
            budget,
        };
        let mut max_attempts = 0;
        let summary = run_frames_with(&cfg, &ch, &ch, &p, |o| {
            max_attempts = max_attempts.max(o.ul_attempts);
            assert!(o.elapsed_time <= budget.frame_time + 1e-12);
        })
        .unwrap();
        assert_eq!(max_attempts, 1);
        let effective = budget.n_max() - budget.feedback_symbols();
        let analytic = oneshot::solve_one_shot(&ch, &ch, &p, effective)
            .unwrap()
            .loop_reliability;
        let sigma = (analytic * (1.0 - analytic) / summary.frames as f64).sqrt();
        assert!(
            (summary.empirical_reliability - analytic).abs() <= 4.0 * sigma.max(1e-9)
        );
    }

    #[test]
    fn latency_never_exceeds_deadline() {
        let ch = symmetric();
        let p = params();
        // Policy built for the zero-feedback index, replayed with T_f > 0;
        // the index reduction must keep every frame inside the deadline.
        let budget = FrameBudget::new(10e-3, 4e-6, 60e-6).unwrap();
        let policy = solve_policy(&ch, &ch, &p, budget.n_max());
        let cfg = SimConfig {
            frames: 50_000,
            seed: 9,
            source: ScheduleSource::Policy(policy),
            budget,
        };
        let summary = run_frames_with(&cfg, &ch, &ch, &p, |o| {
            assert!(o.elapsed_time <= budget.frame_time + 1e-12);
            assert!(o.dl_success <= o.ul_success);
        })
        .unwrap();
        assert!(summary.max_elapsed_time <= budget.frame_time + 1e-12);
        assert!(summary.frames == 50_000);
    }

    #[test]
    fn infeasible_fixed_schedule_is_config_error() {
        let ch = symmetric();
        let sched = Schedule::new(vec![2000, 600], 400); // 3000 > 2500
        let cfg = SimConfig {
            frames: 10,
            seed: 0,
            source: ScheduleSource::Fixed(sched),
            budget: budget_2500(),
        };
        assert!(matches!(
            run_frames(&cfg, &ch, &ch, &params()),
            Err(ClarqError::Config(_))
        ));
    }

    #[test]
    fn csv_stream_has_stable_columns() {
        let outcomes = vec![FrameOutcome {
            frame_index: 0,
            ul_attempts: 2,
            ul_success: true,
            dl_success: true,
            ul_symbols: 1576,
            elapsed_time: 8.5e-3,
        }];
        let mut buf = Vec::new();
        write_outcomes_csv(outcomes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "frame_index,ul_attempts,ul_success,dl_success,ul_symbols,elapsed_us"
        ));
        assert!(text.contains("0,2,1,1,1576,8500.000"));
    }

    #[test]
    fn percentile_lookup() {
        let ch = symmetric();
        let p = params();
        let policy = solve_policy(&ch, &ch, &p, 1200);
        let sched = extract_schedule(&policy, 1200);
        let cfg = SimConfig {
            frames: 50_000,
            seed: 21,
            source: ScheduleSource::Fixed(sched.clone()),
            budget: budget_for(1200),
        };
        let summary = run_frames(&cfg, &ch, &ch, &p).unwrap();
        // Nearly every frame succeeds on the first attempt, so the median
        // is exactly the first slot; the maximum is the full ladder.
        assert_eq!(summary.ul_symbols_percentile(0.5), sched.ul_slots[0]);
        assert_eq!(summary.ul_symbols_percentile(1.0), sched.total_ul());
    }
}
