//! Static baselines for the closed-loop allocation problem.
//!
//! Three strategies that never adapt mid-frame:
//!
//! - **One-shot**: a single uplink slot followed by a single downlink slot,
//!   sized once ([`solve_one_shot`]). Among all *static* schedules this is
//!   optimal, so it doubles as the static-HARQ upper bound.
//! - **Static multi-slot HARQ**: a fixed list of uplink/downlink slots with
//!   incremental-redundancy combining, evaluated (not optimized — the
//!   optimum is known to be the one-shot) by [`static_harq_reliability`].
//! - **Greedy equal-error**: at every retransmission stage, re-split the
//!   remaining blocklength as if it were a fresh one-shot problem
//!   ([`naive_clarq_policy`], chained by [`naive_schedule`]). This is the
//!   natural "naive" dynamic baseline the optimal policy is measured
//!   against.

use crate::dp::Schedule;
use crate::fbl::{self, ChannelSpec, FblParams, FrameBudget};
use crate::{ClarqError, Result};
use serde::{Deserialize, Serialize};

/// An uplink/downlink split of a fixed blocklength budget, with its
/// per-direction error rates and the closed-loop success probability
/// `(1 − ε^U)(1 − ε^D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneShotSplit {
    /// Uplink slot length `n^U`.
    pub n_ul: u32,
    /// Downlink slot length `n^D = n_total − n^U`.
    pub n_dl: u32,
    /// Uplink error rate at `n_ul`.
    pub eps_ul: f64,
    /// Downlink error rate at `n_dl`.
    pub eps_dl: f64,
    /// `(1 − eps_ul) · (1 − eps_dl)`.
    pub loop_reliability: f64,
}

/// Optimal single-attempt split of `n_total` symbols between one uplink and
/// one downlink slot.
///
/// The real-valued relaxation of this problem is stationary exactly where
/// the two error rates are equal, and on symmetric links that
/// characterization pins the optimum ([`stationarity_root`]). On asymmetric
/// links the *integer* argmax can sit tens of symbols away from the
/// equal-error point, so the objective is maximized by direct integer scan
/// over the feasible range `[n_min^U, n_total − n_min^D]` — exact by
/// construction and linear in `n_total`. Ties break toward the smallest
/// uplink slot, matching the dynamic program's convention.
///
/// Errors: [`ClarqError::Infeasible`] when no split satisfies both slot
/// minima (`n_total < n_min^U + n_min^D`) — the no-transmission case.
pub fn solve_one_shot(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_total: u32,
) -> Result<OneShotSplit> {
    let n_min_ul = fbl::min_blocklength(ul, params);
    let n_min_dl = fbl::min_blocklength(dl, params);
    if n_total < n_min_ul + n_min_dl {
        return Err(ClarqError::Infeasible(format!(
            "n_total = {n_total} cannot host the slot minima {n_min_ul} + {n_min_dl}"
        )));
    }
    let d = params.packet_bits;
    let mut best_m = n_min_ul;
    let mut best_reward = f64::NEG_INFINITY;
    for m in n_min_ul..=(n_total - n_min_dl) {
        let reward = (1.0 - fbl::packet_error_rate(ul, m, d))
            * (1.0 - fbl::packet_error_rate(dl, n_total - m, d));
        if reward > best_reward {
            best_reward = reward;
            best_m = m;
        }
    }
    let eps_ul = fbl::packet_error_rate(ul, best_m, d);
    let eps_dl = fbl::packet_error_rate(dl, n_total - best_m, d);
    Ok(OneShotSplit {
        n_ul: best_m,
        n_dl: n_total - best_m,
        eps_ul,
        eps_dl,
        loop_reliability: (1.0 - eps_ul) * (1.0 - eps_dl),
    })
}

/// Real-valued equal-error point of the one-shot problem: the unique `n`
/// with `ε^U(n) = ε^D(n_total − n)`, found by bisection (the difference is
/// strictly decreasing in `n`).
///
/// On symmetric links this is exactly `n_total / 2` and rounds to the
/// integer optimum; on asymmetric links it is a fast approximation whose
/// distance to the true integer argmax can exceed ±1 — use
/// [`solve_one_shot`] when exactness matters. Returns `None` when the
/// difference does not change sign inside the feasible bracket (the optimum
/// then sits on the bracket edge).
pub fn stationarity_root(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_total: u32,
) -> Option<f64> {
    let n_min_ul = fbl::min_blocklength(ul, params) as f64;
    let n_min_dl = fbl::min_blocklength(dl, params) as f64;
    let n_total = n_total as f64;
    if n_total < n_min_ul + n_min_dl {
        return None;
    }
    let d = params.packet_bits;
    let diff = |n: f64| real_error_rate(ul, n, d) - real_error_rate(dl, n_total - n, d);
    let (mut lo, mut hi) = (n_min_ul, n_total - n_min_dl);
    let (d_lo, d_hi) = (diff(lo), diff(hi));
    if d_lo < 0.0 || d_hi > 0.0 {
        return None;
    }
    // 80 halvings of a ≤ 2^32 bracket reach far below one-symbol resolution.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Error rate at a real-valued blocklength (root-finding support).
fn real_error_rate(ch: &ChannelSpec, n: f64, d: u32) -> f64 {
    fbl::q_function(
        (n / ch.dispersion).sqrt()
            * (ch.capacity - d as f64 / n)
            * std::f64::consts::LN_2,
    )
}

/// Closed-loop reliability of a *static* multi-slot HARQ schedule with
/// incremental-redundancy combining: `(1 − ε^U_(I)) · (1 − ε^D_(I))` where
/// each `ε_(I)` is the cumulative-blocklength error rate over all allocated
/// slots of that direction.
///
/// The slot lists must have equal length `I ≥ 1` (one feedback follows
/// every slot except the final downlink, so `2I − 1` feedback periods are
/// charged against the frame). A schedule that does not fit the frame is a
/// domain error. This is an evaluator only: among static schedules the
/// one-shot split is optimal, so there is nothing to optimize here.
pub fn static_harq_reliability(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    budget: &FrameBudget,
    ul_slots: &[u32],
    dl_slots: &[u32],
) -> Result<f64> {
    if ul_slots.is_empty() || ul_slots.len() != dl_slots.len() {
        return Err(ClarqError::Domain(format!(
            "static HARQ needs equal, nonempty slot lists (got {} UL, {} DL)",
            ul_slots.len(),
            dl_slots.len()
        )));
    }
    if ul_slots.iter().chain(dl_slots).any(|&n| n == 0) {
        return Err(ClarqError::Domain("zero-length slot".into()));
    }
    let rounds = ul_slots.len() as f64;
    let symbols: u64 = ul_slots.iter().chain(dl_slots).map(|&n| n as u64).sum();
    let elapsed =
        symbols as f64 * budget.symbol_time + (2.0 * rounds - 1.0) * budget.feedback_time;
    if elapsed > budget.frame_time * (1.0 + 1e-12) {
        return Err(ClarqError::Domain(format!(
            "static schedule needs {elapsed:.6e} s but the frame is {:.6e} s",
            budget.frame_time
        )));
    }
    let total_ul: u32 = ul_slots.iter().sum();
    let total_dl: u32 = dl_slots.iter().sum();
    let eps_ul = fbl::harq2_error_rate(ul, total_ul, params.packet_bits);
    let eps_dl = fbl::harq2_error_rate(dl, total_dl, params.packet_bits);
    Ok((1.0 - eps_ul) * (1.0 - eps_dl))
}

/// Rounds of a static HARQ schedule whose *cumulative* per-direction error
/// still exceeds `eps_max` (1-based indices). The reliability model places
/// no hard constraint on intermediate rounds, so violations are reported
/// for inspection rather than rejected.
pub fn static_harq_attempt_violations(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    ul_slots: &[u32],
    dl_slots: &[u32],
) -> Vec<usize> {
    let mut violations = Vec::new();
    let (mut cum_ul, mut cum_dl) = (0u32, 0u32);
    for (i, (&u, &d)) in ul_slots.iter().zip(dl_slots).enumerate() {
        cum_ul += u;
        cum_dl += d;
        let eps_ul = fbl::harq2_error_rate(ul, cum_ul, params.packet_bits);
        let eps_dl = fbl::harq2_error_rate(dl, cum_dl, params.packet_bits);
        if eps_ul.max(eps_dl) > params.eps_max {
            violations.push(i + 1);
        }
    }
    violations
}

/// Greedy equal-error stage policy: the uplink slot a naive adaptive
/// transmitter picks with `n_remaining` symbols left — the one-shot optimal
/// split of the remainder, ignoring that further retransmissions may
/// follow.
///
/// Errors: [`ClarqError::Infeasible`] when the remainder cannot host both
/// slot minima.
pub fn naive_clarq_policy(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_remaining: u32,
) -> Result<u32> {
    solve_one_shot(ul, dl, params, n_remaining).map(|split| split.n_ul)
}

/// Full schedule realized by chaining [`naive_clarq_policy`] greedily until
/// the remainder can no longer host both slot minima. Returns the empty
/// schedule when even the first stage is infeasible.
pub fn naive_schedule(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_max: u32,
) -> Schedule {
    let n_min_ul = fbl::min_blocklength(ul, params);
    let n_min_dl = fbl::min_blocklength(dl, params);
    let mut ul_slots = Vec::new();
    let mut remaining = n_max;
    while remaining >= n_min_ul + n_min_dl {
        // Feasibility was just checked, so the split cannot fail.
        let m = naive_clarq_policy(ul, dl, params, remaining)
            .expect("remainder ≥ slot minima implies a feasible split");
        ul_slots.push(m);
        remaining -= m;
    }
    let final_dl = remaining;
    Schedule::new(ul_slots, final_dl)
}
