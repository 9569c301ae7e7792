//! Adaptive power control: joint search over per-attempt power levels and
//! blocklengths under a per-frame uplink energy budget.
//!
//! Each uplink attempt may transmit at one of a small set of discrete power
//! levels (multiples of the baseline symbol energy). Power scales the
//! uplink SNR linearly, and capacity, dispersion, and the minimal slot
//! length are recomputed at the scaled SNR; the downlink is not power
//! controlled. The budget constrains the *worst-case* frame energy
//! `Σ_i P_i·n^U_i` — the deterministic upper bound a battery must be
//! provisioned for — while reported statistics also include the expected
//! energy, which weights attempt `i` by the probability all earlier
//! attempts failed.
//!
//! The joint problem has no known polynomial structure, so the solver is
//! scoped to case-study sizes (at most [`APC_MAX_LEVELS`] levels; stage
//! counts up to [`APC_MAX_STAGES`] are searched) and works in two exact
//! phases per power assignment:
//!
//! 1. a stage-indexed value table shared across assignments with a common
//!    suffix (the tail subproblem depends only on the remaining powers),
//!    which is the exact optimum when the budget cannot bind;
//! 2. when the budget can bind, depth-first enumeration over stage
//!    blocklengths with the unconstrained tables as admissible bounds —
//!    branch-and-bound that prunes without excluding any improving branch.

use crate::dp::{self, Schedule, ScheduleStats};
use crate::fbl::{self, ChannelSpec, FblParams};
use crate::{ClarqError, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Most power levels an instance may offer (instance-size guard).
pub const APC_MAX_LEVELS: usize = 3;
/// Most uplink attempts the search enumerates. Case-study scope: the
/// marginal reliability of a fifth attempt is negligible at the frame
/// sizes this solver targets.
pub const APC_MAX_STAGES: usize = 4;
/// Node guard for the budget-bound enumeration phase.
const BNB_NODE_BUDGET: u64 = 50_000_000;

/// Power-control search instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApcConfig {
    /// Available per-attempt power levels as multiples of the baseline
    /// symbol energy; nonempty, strictly ascending, positive.
    pub power_levels: Vec<f64>,
    /// Worst-case frame energy bound, in baseline-symbol-energy units.
    pub energy_budget: f64,
    /// Total blocklength budget of the frame.
    pub n_max: u32,
}

impl ApcConfig {
    /// Validated constructor.
    pub fn new(power_levels: Vec<f64>, energy_budget: f64, n_max: u32) -> Result<Self> {
        if power_levels.is_empty() {
            return Err(ClarqError::Config("power_levels must be nonempty".into()));
        }
        if power_levels.len() > APC_MAX_LEVELS {
            return Err(ClarqError::Config(format!(
                "{} power levels exceed the case-study guard of {APC_MAX_LEVELS}",
                power_levels.len()
            )));
        }
        if power_levels.windows(2).any(|w| w[0] >= w[1]) || power_levels[0] <= 0.0 {
            return Err(ClarqError::Config(
                "power_levels must be positive and strictly ascending".into(),
            ));
        }
        if energy_budget.is_nan() || energy_budget <= 0.0 {
            return Err(ClarqError::Config(format!(
                "energy_budget must be positive (got {energy_budget})"
            )));
        }
        if n_max == 0 {
            return Err(ClarqError::Config("n_max must be ≥ 1".into()));
        }
        Ok(ApcConfig { power_levels, energy_budget, n_max })
    }
}

/// One stage of a power-controlled schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApcStage {
    /// Uplink slot length of this attempt.
    pub n_ul: u32,
    /// Downlink slot length reserved alongside this attempt.
    pub n_dl: u32,
    /// Power level of the uplink attempt (multiple of baseline energy).
    pub power: f64,
}

/// A full power-controlled schedule. The blocklengths obey the same
/// nesting as plain schedules: `n^D_i = n^U_{i+1} + n^D_{i+1}` and
/// `n^U_1 + n^D_1 = n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApcSchedule {
    /// Stages in transmission order.
    pub stages: Vec<ApcStage>,
}

impl ApcSchedule {
    /// Number of uplink attempts.
    pub fn attempts(&self) -> usize {
        self.stages.len()
    }

    /// Worst-case frame energy `Σ_i P_i·n^U_i` (all attempts transmitted).
    pub fn worst_case_energy(&self) -> f64 {
        self.stages.iter().map(|s| s.power * s.n_ul as f64).sum()
    }

    /// Total blocklength `Σ n^U_i + n^D_I` the schedule occupies.
    pub fn n_max(&self) -> u32 {
        match self.stages.last() {
            Some(last) => self.stages.iter().map(|s| s.n_ul).sum::<u32>() + last.n_dl,
            None => 0,
        }
    }

    /// Drop the power dimension: the plain nested schedule.
    pub fn to_schedule(&self) -> Schedule {
        match self.stages.last() {
            Some(last) => Schedule::new(
                self.stages.iter().map(|s| s.n_ul).collect(),
                last.n_dl,
            ),
            None => Schedule::empty(),
        }
    }
}

/// Closed-loop reliability of a power-controlled schedule: the plain
/// closed-loop sum with each uplink error evaluated at that stage's
/// power-scaled SNR and the downlink at the unscaled SNR.
pub fn apc_loop_reliability(
    sched: &ApcSchedule,
    ul_base: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
) -> Result<f64> {
    let mut reliability = 0.0;
    let mut carry = 1.0; // probability all earlier uplink attempts failed
    for stage in &sched.stages {
        let ul = ul_base.scaled(stage.power)?;
        let eps_ul = fbl::packet_error_rate(&ul, stage.n_ul, params.packet_bits);
        let eps_dl = fbl::packet_error_rate(dl, stage.n_dl, params.packet_bits);
        reliability += carry * (1.0 - eps_ul) * (1.0 - eps_dl);
        carry *= eps_ul;
    }
    // Clamp the ulp-level overshoot of the telescoping sum (see
    // `dp::loop_reliability`).
    Ok(reliability.min(1.0))
}

/// Reliability and energy statistics of a power-controlled schedule.
/// Energies are power-weighted: attempt `i` costs `P_i·n^U_i`.
pub fn apc_stats(
    sched: &ApcSchedule,
    ul_base: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
) -> Result<ScheduleStats> {
    let mut reliability = 0.0;
    let mut expected = 0.0;
    let mut carry = 1.0;
    for stage in &sched.stages {
        let ul = ul_base.scaled(stage.power)?;
        let eps_ul = fbl::packet_error_rate(&ul, stage.n_ul, params.packet_bits);
        let eps_dl = fbl::packet_error_rate(dl, stage.n_dl, params.packet_bits);
        reliability += carry * (1.0 - eps_ul) * (1.0 - eps_dl);
        expected += carry * stage.power * stage.n_ul as f64;
        carry *= eps_ul;
    }
    Ok(ScheduleStats {
        loop_reliability: reliability,
        loop_error: 1.0 - reliability,
        expected_ul_energy: expected,
        min_ul_energy: sched
            .stages
            .first()
            .map(|s| s.power * s.n_ul as f64)
            .unwrap_or(0.0),
        max_ul_energy: sched.worst_case_energy(),
    })
}

/// Per-assignment value table: the exact optimum of the tail subproblem
/// `(P_i, …, P_I)` as a function of the remaining blocklength, ignoring
/// the energy budget. `need` is the least blocklength the tail fits in.
struct SuffixTable {
    need: usize,
    value: Vec<f64>, // NEG_INFINITY below `need`
    arg: Vec<u32>,
}

/// Exact solver. Enumerates stage counts `I = 1..=APC_MAX_STAGES` and all
/// `|levels|^I` per-stage power assignments; each assignment is solved
/// exactly (value tables when the budget cannot bind, bounded enumeration
/// otherwise) and the best budget-feasible schedule wins. Ties resolve to
/// the fewest stages, then the lexicographically smallest power sequence,
/// then the smallest slot lengths — the search order, so results are
/// deterministic.
pub fn solve_apc(
    ul_base: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    cfg: &ApcConfig,
) -> Result<(ApcSchedule, ScheduleStats)> {
    // Re-validate so hand-rolled configs get the same guards.
    let cfg = ApcConfig::new(cfg.power_levels.clone(), cfg.energy_budget, cfg.n_max)?;
    let n_max = cfg.n_max as usize;
    let levels = &cfg.power_levels;
    let budget = cfg.energy_budget;

    let dl_min = fbl::min_blocklength(dl, params) as usize;
    let mut ul_scaled = Vec::with_capacity(levels.len());
    let mut ul_min = Vec::with_capacity(levels.len());
    let mut eps_ul = Vec::with_capacity(levels.len());
    for &p in levels {
        let ch = ul_base.scaled(p)?;
        ul_min.push(fbl::min_blocklength(&ch, params) as usize);
        eps_ul.push(fbl::error_rate_table(&ch, cfg.n_max, params.packet_bits));
        ul_scaled.push(ch);
    }
    let eps_dl = fbl::error_rate_table(dl, cfg.n_max, params.packet_bits);

    // Quick global feasibility: the cheapest single attempt must fit both
    // budgets, else no assignment can.
    let any_fits = (0..levels.len()).any(|l| {
        ul_min[l] + dl_min <= n_max && levels[l] * ul_min[l] as f64 <= budget
    });
    if !any_fits {
        return Err(ClarqError::Infeasible(format!(
            "no uplink attempt fits n_max = {n_max} and budget = {budget}"
        )));
    }

    // Build value tables bottom-up over power-level suffixes: the tail
    // subproblem from stage i onward depends only on (P_i, …, P_I), so
    // assignments share tables. Suffixes are keyed by level indices.
    let mut tables: HashMap<Vec<u8>, SuffixTable> = HashMap::new();
    for len in 1..=APC_MAX_STAGES {
        for suffix in level_sequences(levels.len(), len) {
            let lvl = suffix[0] as usize;
            let tail = &suffix[1..];
            let (tail_need, tail_value): (usize, Option<&Vec<f64>>) = if tail.is_empty() {
                (dl_min, None)
            } else {
                let t = &tables[tail];
                (t.need, Some(&t.value))
            };
            let need = ul_min[lvl] + tail_need;
            let mut value = vec![f64::NEG_INFINITY; n_max + 1];
            let mut arg = vec![0u32; n_max + 1];
            for rem in need..=n_max {
                let mut best = f64::NEG_INFINITY;
                let mut best_m = 0u32;
                for m in ul_min[lvl]..=rem - tail_need {
                    let eu = eps_ul[lvl][m];
                    let future = tail_value.map_or(0.0, |v| v[rem - m]);
                    let val = (1.0 - eu) * (1.0 - eps_dl[rem - m]) + eu * future;
                    if val > best {
                        best = val;
                        best_m = m as u32;
                    }
                }
                value[rem] = best;
                arg[rem] = best_m;
            }
            tables.insert(suffix, SuffixTable { need, value, arg });
        }
    }

    let mut best: Option<(f64, Vec<u8>, Vec<u32>)> = None;
    for stages in 1..=APC_MAX_STAGES {
        for assignment in level_sequences(levels.len(), stages) {
            let table = &tables[&assignment];
            if table.need > n_max {
                continue;
            }
            // The mandatory slots alone may already bust the budget.
            let floor_energy: f64 = assignment
                .iter()
                .map(|&l| levels[l as usize] * ul_min[l as usize] as f64)
                .sum();
            if floor_energy > budget {
                continue;
            }
            let unconstrained = table.value[n_max];
            if let Some((v, _, _)) = &best {
                if unconstrained <= *v {
                    continue; // even ignoring the budget this can't improve
                }
            }
            // Fast exact path: extract the unconstrained optimum; if it
            // happens to satisfy the budget it is the constrained optimum.
            let slots = extract_slots(&tables, &assignment, n_max);
            let energy: f64 = assignment
                .iter()
                .zip(&slots)
                .map(|(&l, &m)| levels[l as usize] * m as f64)
                .sum();
            let (value, slots) = if energy <= budget {
                (unconstrained, slots)
            } else {
                match constrained_search(
                    &tables, &assignment, levels, &ul_min, &eps_ul, &eps_dl, n_max, dl_min,
                    budget, best.as_ref().map(|(v, _, _)| *v),
                )? {
                    Some(found) => found,
                    None => continue,
                }
            };
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, assignment, slots));
            }
        }
    }

    let (_, assignment, slots) = best.ok_or_else(|| {
        ClarqError::Infeasible(format!(
            "no schedule satisfies budget {budget} within n_max = {n_max}"
        ))
    })?;
    let mut rem = n_max;
    let mut stage_list = Vec::with_capacity(slots.len());
    for (&l, &m) in assignment.iter().zip(&slots) {
        rem -= m as usize;
        stage_list.push(ApcStage {
            n_ul: m,
            n_dl: rem as u32,
            power: levels[l as usize],
        });
    }
    let sched = ApcSchedule { stages: stage_list };
    debug_assert!(sched.worst_case_energy() <= budget * (1.0 + 1e-12));
    let stats = apc_stats(&sched, ul_base, dl, params)?;
    Ok((sched, stats))
}

/// All level-index sequences of the given length, lexicographic order.
fn level_sequences(levels: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|seq| {
                (0..levels as u8).map(move |l| {
                    let mut next = seq.clone();
                    next.push(l);
                    next
                })
            })
            .collect();
    }
    out
}

/// Walk the per-suffix argmax tables to the unconstrained slot vector.
fn extract_slots(
    tables: &HashMap<Vec<u8>, SuffixTable>,
    assignment: &[u8],
    n_max: usize,
) -> Vec<u32> {
    let mut rem = n_max;
    let mut slots = Vec::with_capacity(assignment.len());
    for start in 0..assignment.len() {
        let m = tables[&assignment[start..]].arg[rem];
        slots.push(m);
        rem -= m as usize;
    }
    slots
}

/// Exact budget-constrained optimum for one assignment: depth-first over
/// stage blocklengths, pruned by the remaining budget and by the
/// unconstrained tail value (an admissible upper bound). Returns the best
/// strictly above `incumbent`, or `None` when the assignment cannot beat
/// it within the budget.
#[allow(clippy::too_many_arguments)]
fn constrained_search(
    tables: &HashMap<Vec<u8>, SuffixTable>,
    assignment: &[u8],
    levels: &[f64],
    ul_min: &[usize],
    eps_ul: &[Vec<f64>],
    eps_dl: &[f64],
    n_max: usize,
    dl_min: usize,
    budget: f64,
    incumbent: Option<f64>,
) -> Result<Option<(f64, Vec<u32>)>> {
    struct Ctx<'a> {
        tables: &'a HashMap<Vec<u8>, SuffixTable>,
        assignment: &'a [u8],
        levels: &'a [f64],
        ul_min: &'a [usize],
        eps_ul: &'a [Vec<f64>],
        eps_dl: &'a [f64],
        dl_min: usize,
        budget: f64,
        // Cheapest possible energy of stages i.. (mandatory slots only).
        min_tail_energy: Vec<f64>,
        nodes: u64,
        best: Option<(f64, Vec<u32>)>,
        floor: f64,
    }

    fn dfs(
        ctx: &mut Ctx<'_>,
        stage: usize,
        rem: usize,
        used_energy: f64,
        carry: f64,
        prefix: f64,
        chosen: &mut Vec<u32>,
    ) -> Result<()> {
        ctx.nodes += 1;
        if ctx.nodes > BNB_NODE_BUDGET {
            return Err(ClarqError::Domain(
                "budget-constrained power search exceeded its node guard; \
                 shrink n_max, the level set, or the stage count"
                    .into(),
            ));
        }
        let suffix = &ctx.assignment[stage..];
        let table = &ctx.tables[suffix];
        // Admissible bound: finish unconstrained from here.
        let bound = prefix + carry * table.value[rem];
        let cutoff = ctx.best.as_ref().map(|(v, _)| *v).unwrap_or(ctx.floor);
        if bound <= cutoff {
            return Ok(());
        }
        let lvl = ctx.assignment[stage] as usize;
        let power = ctx.levels[lvl];
        let tail_need = if stage + 1 < ctx.assignment.len() {
            ctx.tables[&ctx.assignment[stage + 1..]].need
        } else {
            ctx.dl_min
        };
        let last = stage + 1 == ctx.assignment.len();
        for m in ctx.ul_min[lvl]..=rem - tail_need {
            let energy = used_energy + power * m as f64;
            if energy + ctx.min_tail_energy[stage + 1] > ctx.budget {
                break; // energy grows with m; no longer slot fits either
            }
            let eu = ctx.eps_ul[lvl][m];
            let stage_val = carry * (1.0 - eu) * (1.0 - ctx.eps_dl[rem - m]);
            chosen.push(m as u32);
            if last {
                let total = prefix + stage_val;
                if total > ctx.best.as_ref().map(|(v, _)| *v).unwrap_or(ctx.floor) {
                    ctx.best = Some((total, chosen.clone()));
                }
            } else {
                dfs(ctx, stage + 1, rem - m, energy, carry * eu, prefix + stage_val, chosen)?;
            }
            chosen.pop();
        }
        Ok(())
    }

    let mut min_tail_energy = vec![0.0; assignment.len() + 1];
    for i in (0..assignment.len()).rev() {
        let l = assignment[i] as usize;
        min_tail_energy[i] = min_tail_energy[i + 1] + levels[l] * ul_min[l] as f64;
    }
    let mut ctx = Ctx {
        tables,
        assignment,
        levels,
        ul_min,
        eps_ul,
        eps_dl,
        dl_min,
        budget,
        min_tail_energy,
        nodes: 0,
        best: None,
        floor: incumbent.unwrap_or(f64::NEG_INFINITY),
    };
    let mut chosen = Vec::with_capacity(assignment.len());
    dfs(&mut ctx, 0, n_max, 0.0, 1.0, 0.0, &mut chosen)?;
    Ok(ctx.best)
}

/// Convenience: plain (single-power) schedule and stats at the same frame,
/// for with/without comparisons. Returns the no-control schedule, its
/// stats at unit power, and its worst-case energy.
pub fn baseline_without_apc(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_max: u32,
) -> (Schedule, ScheduleStats) {
    let policy = dp::solve_policy(ul, dl, params, n_max);
    let sched = dp::extract_schedule(&policy, n_max);
    let stats = dp::energy_stats(&sched, ul, dl, params, 1.0);
    (sched, stats)
}
