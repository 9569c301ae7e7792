//! Integer dynamic program for the optimal closed-loop retransmission
//! policy.
//!
//! State is the remaining blocklength `n` of the frame. Choosing the next
//! uplink slot `m` yields the stage reward (uplink and downlink both
//! succeed now) plus, on an uplink failure, whatever the best policy earns
//! from the remainder:
//!
//! ```text
//! Ξ[n] = max over m ∈ [n_min_ul, n − n_min_dl] of
//!        (1 − ε^U(m)) · (1 − ε^D(n − m)) + ε^U(m) · Ξ[n − m]
//! ```
//!
//! `Φ[n]` records the argmax. Below `n_min_ul + n_min_dl` no transmission
//! fits, so `Ξ[n] = 0` (and `Φ[n] = n` by convention); that zero makes the
//! single recursion above also cover the terminal stage, where no further
//! retransmission can follow. Tables are filled iteratively in ascending
//! `n` — O(n_max²) time, O(n_max) space — and ties break toward the
//! smallest `m`, so tables are bit-reproducible.
//!
//! Feedback time is fixed to zero inside the recursion (the regime all
//! reference results use); a nonzero feedback cost is honored by the
//! protocol simulator replaying the policy, not by the optimizer. The
//! reliability ceiling `eps_max` enters only through the slot minima.
//!
//! The finite-blocklength error model loses validity for very long slots;
//! schedules whose slots exceed [`FBL_VALIDITY_CEILING`] still compute but
//! carry a warning (see [`Schedule::validity_warning`]).

use crate::fbl::{self, ChannelSpec, FblParams};
use crate::{ClarqError, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Slot length beyond which the finite-blocklength error model should be
/// treated as an infinite-blocklength regime; schedules using longer slots
/// are flagged, never rejected.
pub const FBL_VALIDITY_CEILING: u32 = 4000;

/// Memoized policy tables over remaining blocklength.
///
/// Invariants: `phi[n] == n` and `xi[n] == 0` for every
/// `n < n_min_ul + n_min_dl`; `xi` lies in `[0, 1]` and is nondecreasing
/// in `n`. The builder inputs are retained so serialized policies are
/// self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct DpPolicy {
    /// Optimal next uplink slot length per remaining blocklength,
    /// indexed 0..=n_max.
    pub phi: Vec<u32>,
    /// Best expected closed-loop reward per remaining blocklength,
    /// indexed 0..=n_max.
    pub xi: Vec<f64>,
    /// Minimal uplink slot length.
    pub n_min_ul: u32,
    /// Minimal downlink slot length.
    pub n_min_dl: u32,
    /// Largest remaining blocklength the tables cover.
    pub n_max: u32,
    /// Uplink SNR (linear) the tables were built for.
    pub ul_snr_linear: f64,
    /// Downlink SNR (linear) the tables were built for.
    pub dl_snr_linear: f64,
    /// Packet payload in bits.
    pub packet_bits: u32,
    /// Per-slot error ceiling that produced the slot minima.
    pub eps_max: f64,
}

/// A concrete retransmission schedule in reduced form: the uplink slot of
/// every stage plus the downlink slot of the final stage.
///
/// The downlink reservation of earlier stages is implied by the nesting
/// `n^D_{i−1} = n^U_i + n^D_i`: whatever stage `i` does not consume as
/// uplink is reserved for its downlink, and a failed uplink hands that
/// reservation to stage `i+1`. An empty schedule (no feasible stage)
/// carries `final_dl = 0` and reliability 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Uplink slot lengths `[n^U_1, …, n^U_I]`.
    pub ul_slots: Vec<u32>,
    /// Downlink slot of the final stage, `n^D_I`.
    pub final_dl: u32,
}

impl Schedule {
    /// Assemble a schedule from its reduced form.
    pub fn new(ul_slots: Vec<u32>, final_dl: u32) -> Self {
        Schedule { ul_slots, final_dl }
    }

    /// The empty (infeasible) schedule.
    pub fn empty() -> Self {
        Schedule { ul_slots: Vec::new(), final_dl: 0 }
    }

    /// Number of uplink attempts `I`.
    pub fn attempts(&self) -> usize {
        self.ul_slots.len()
    }

    /// True when no transmission is scheduled.
    pub fn is_empty(&self) -> bool {
        self.ul_slots.is_empty()
    }

    /// Total uplink symbols across all attempts.
    pub fn total_ul(&self) -> u32 {
        self.ul_slots.iter().sum()
    }

    /// Total blocklength the schedule occupies (uplink slots plus the final
    /// downlink); equals the budget it was extracted for.
    pub fn n_max(&self) -> u32 {
        self.total_ul() + self.final_dl
    }

    /// Downlink reservation per stage: `n^D_i = final_dl + Σ_{j>i} n^U_j`,
    /// the slot the downlink would use if stage `i`'s uplink succeeds.
    pub fn dl_slots(&self) -> Vec<u32> {
        let mut dl = vec![0u32; self.ul_slots.len()];
        let mut acc = self.final_dl;
        for i in (0..self.ul_slots.len()).rev() {
            dl[i] = acc;
            if i > 0 {
                acc += self.ul_slots[i];
            }
        }
        dl
    }

    /// Warning text when any slot exceeds the given validity ceiling of the
    /// finite-blocklength model (`None` when all slots are inside it).
    pub fn validity_warning(&self, ceiling: u32) -> Option<String> {
        let longest = self
            .ul_slots
            .iter()
            .copied()
            .chain(self.dl_slots())
            .max()
            .unwrap_or(0);
        (longest > ceiling).then(|| {
            format!(
                "slot length {longest} exceeds the finite-blocklength validity \
                 ceiling {ceiling}; treat its error rate as an infinite-blocklength limit"
            )
        })
    }
}

/// Analytic summary of a schedule: closed-loop reliability and uplink
/// energy statistics in symbol-energy units (slot symbols × per-symbol
/// power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStats {
    /// Probability the loop closes within the frame.
    pub loop_reliability: f64,
    /// `1 − loop_reliability`.
    pub loop_error: f64,
    /// Expected uplink energy: attempt `i` transmits only after `i − 1`
    /// uplink failures.
    pub expected_ul_energy: f64,
    /// First attempt only (every frame spends at least this).
    pub min_ul_energy: f64,
    /// All `I` attempts (worst case).
    pub max_ul_energy: f64,
}

/// Build the policy tables for every remaining blocklength up to `n_max`.
///
/// A degenerate `n_max` (below the combined slot minima) yields the
/// all-zero-reward policy rather than an error.
pub fn solve_policy(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_max: u32,
) -> DpPolicy {
    let n_min_ul = fbl::min_blocklength(ul, params);
    let n_min_dl = fbl::min_blocklength(dl, params);
    let eps_ul = fbl::error_rate_table(ul, n_max, params.packet_bits);
    let eps_dl = fbl::error_rate_table(dl, n_max, params.packet_bits);

    let size = n_max as usize + 1;
    let mut phi = vec![0u32; size];
    let mut xi = vec![0.0f64; size];
    let first_feasible = (n_min_ul + n_min_dl) as usize;

    for n in 1..size {
        if n < first_feasible {
            // Insufficient for one uplink + one downlink: no transmission.
            phi[n] = n as u32;
            continue;
        }
        // Unified recursion: xi[n − m] is zero whenever the remainder can't
        // host another stage, which makes this same expression exact for
        // the terminal stage as well.
        let mut best_m = n_min_ul as usize;
        let mut best_reward = f64::NEG_INFINITY;
        for m in (n_min_ul as usize)..=(n - n_min_dl as usize) {
            let reward =
                (1.0 - eps_ul[m]) * (1.0 - eps_dl[n - m]) + eps_ul[m] * xi[n - m];
            if reward > best_reward {
                best_reward = reward;
                best_m = m;
            }
        }
        phi[n] = best_m as u32;
        xi[n] = best_reward;
    }

    DpPolicy {
        phi,
        xi,
        n_min_ul,
        n_min_dl,
        n_max,
        ul_snr_linear: ul.snr_linear,
        dl_snr_linear: dl.snr_linear,
        packet_bits: params.packet_bits,
        eps_max: params.eps_max,
    }
}

/// Read the schedule the policy realizes from a starting blocklength:
/// repeatedly take `Φ[n]` as the next uplink slot and recurse on the
/// remainder until it can no longer host both slot minima; that remainder
/// is the final downlink slot.
///
/// Panics if the policy tables do not cover `n_max` (caller precondition).
pub fn extract_schedule(policy: &DpPolicy, n_max: u32) -> Schedule {
    assert!(
        n_max <= policy.n_max,
        "policy built for n_max = {} cannot extract at {}",
        policy.n_max,
        n_max
    );
    let first_feasible = policy.n_min_ul + policy.n_min_dl;
    if n_max < first_feasible {
        return Schedule::empty();
    }
    let mut ul_slots = Vec::new();
    let mut n = n_max;
    while n >= first_feasible {
        let m = policy.phi[n as usize];
        ul_slots.push(m);
        n -= m;
    }
    Schedule::new(ul_slots, n)
}

/// Closed-loop reliability of a schedule under the simple-ARQ model
/// (failed attempts are discarded, no combining):
///
/// ```text
/// Σ_{i=1..I} (1 − ε^U_i)(1 − ε^D_i) · Π_{j<i} ε^U_j
/// ```
///
/// where `ε^D_i` is evaluated at the stage's downlink reservation. The
/// empty schedule has reliability 0.
pub fn loop_reliability(
    sched: &Schedule,
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
) -> f64 {
    let d = params.packet_bits;
    let dl_slots = sched.dl_slots();
    let mut reliability = 0.0;
    let mut prefix_failure = 1.0;
    for (i, &m) in sched.ul_slots.iter().enumerate() {
        let eps_u = fbl::packet_error_rate(ul, m, d);
        let eps_d = fbl::packet_error_rate(dl, dl_slots[i], d);
        reliability += prefix_failure * (1.0 - eps_u) * (1.0 - eps_d);
        prefix_failure *= eps_u;
    }
    // The sum telescopes to at most 1 exactly, but the float accumulation
    // can overshoot by an ulp; clamp so `1 - reliability` is never negative.
    reliability.min(1.0)
}

/// Reliability plus uplink energy statistics for a schedule at a constant
/// per-symbol uplink power `p_ul` (symbol-energy units).
pub fn energy_stats(
    sched: &Schedule,
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    p_ul: f64,
) -> ScheduleStats {
    let reliability = loop_reliability(sched, ul, dl, params);
    let mut expected = 0.0;
    let mut prefix_failure = 1.0;
    for &m in &sched.ul_slots {
        expected += prefix_failure * m as f64 * p_ul;
        prefix_failure *= fbl::packet_error_rate(ul, m, params.packet_bits);
    }
    ScheduleStats {
        loop_reliability: reliability,
        loop_error: 1.0 - reliability,
        expected_ul_energy: expected,
        min_ul_energy: sched.ul_slots.first().copied().unwrap_or(0) as f64 * p_ul,
        max_ul_energy: sched.total_ul() as f64 * p_ul,
    }
}

/// One named assertion of [`verify_structure`].
#[derive(Debug, Clone, Serialize)]
pub struct StructureCheck {
    /// Stable identifier of the bound being checked.
    pub name: &'static str,
    /// Whether the schedule satisfies it.
    pub passed: bool,
    /// Human-readable evidence (the violated bound when failing).
    pub detail: String,
}

/// Outcome of the structural verification of an extracted schedule.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Individual named checks.
    pub checks: Vec<StructureCheck>,
}

impl StructureReport {
    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

impl std::fmt::Display for StructureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for check in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.detail
            )?;
        }
        Ok(())
    }
}

/// Verify the structural properties optimal schedules are known to satisfy:
///
/// - `ul_monotone` — uplink slots never grow across retransmissions;
/// - `terminal_equal_error` — the final stage balances its uplink and
///   downlink error rates to within one-symbol granularity (moving one
///   symbol between the two terminal slots cannot shrink the gap). This
///   characterization is exact on symmetric links; on strongly asymmetric
///   ones the true optimum maximizes the terminal-stage success product
///   instead, which can sit more than one symbol from the equal-error
///   point, so the check may legitimately report FAIL there;
/// - `geometric_bounds` (symmetric links only) — counting stages from the
///   end, slots live in geometrically growing windows:
///   `n^U_i ∈ [n_min, 2^{I−i+1}·n_min)` and
///   `n^D_i ∈ [(I−i+1)·n_min, 2^{I−i+1}·n_min)`;
/// - `stage_count_bounds` — `I ∈ (log2(R) − 1, R − 1]` with
///   `R = n_max / n_min_ul`. The lower bound is derived for symmetric
///   links; on asymmetric ones it is reported as-is and may legitimately
///   fail for extreme minima.
///
/// Empty and single-stage schedules satisfy the slot-sequence checks
/// vacuously. Each failed check names the violated bound in its detail.
pub fn verify_structure(
    sched: &Schedule,
    policy: &DpPolicy,
    symmetric: bool,
) -> StructureReport {
    let ul = ChannelSpec::from_linear(policy.ul_snr_linear)
        .expect("policy retains a valid channel");
    let dl = ChannelSpec::from_linear(policy.dl_snr_linear)
        .expect("policy retains a valid channel");
    let d = policy.packet_bits;
    let mut checks = Vec::new();

    // (a) Uplink slots monotone nonincreasing.
    let monotone_violation = sched
        .ul_slots
        .windows(2)
        .position(|w| w[0] < w[1]);
    checks.push(StructureCheck {
        name: "ul_monotone",
        passed: monotone_violation.is_none(),
        detail: match monotone_violation {
            None => format!("{:?} nonincreasing", sched.ul_slots),
            Some(i) => format!(
                "n^U_{} = {} < n^U_{} = {}",
                i + 1,
                sched.ul_slots[i],
                i + 2,
                sched.ul_slots[i + 1]
            ),
        },
    });

    // (b) Terminal stage equal-error within one-symbol granularity.
    if let Some(&last_ul) = sched.ul_slots.last() {
        let terminal_total = last_ul + sched.final_dl;
        let gap = |m: u32| {
            (fbl::packet_error_rate(&ul, m, d)
                - fbl::packet_error_rate(&dl, terminal_total - m, d))
                .abs()
        };
        let here = gap(last_ul);
        let mut reducible = false;
        if last_ul > policy.n_min_ul && terminal_total - (last_ul - 1) >= policy.n_min_dl {
            reducible |= gap(last_ul - 1) < here * (1.0 - 1e-12);
        }
        if sched.final_dl > policy.n_min_dl {
            reducible |= gap(last_ul + 1) < here * (1.0 - 1e-12);
        }
        checks.push(StructureCheck {
            name: "terminal_equal_error",
            passed: !reducible,
            detail: if reducible {
                format!(
                    "terminal split ({last_ul}, {}) gap {here:.3e} shrinks under a \
                     one-symbol move",
                    sched.final_dl
                )
            } else {
                format!(
                    "terminal split ({last_ul}, {}) gap {here:.3e} is one-symbol tight",
                    sched.final_dl
                )
            },
        });
    }

    // (c) Geometric slot windows, meaningful for symmetric links where a
    // single n_min governs both directions.
    if symmetric && !sched.is_empty() {
        let n_min = policy.n_min_ul as u64;
        let stages = sched.attempts();
        let dl_slots = sched.dl_slots();
        let mut detail = String::from("all slots inside their geometric windows");
        let mut passed = true;
        for (i, (&u, &dl_i)) in sched.ul_slots.iter().zip(&dl_slots).enumerate() {
            // Window exponent for stage i (1-based): I − i + 1, capped to
            // keep the shift in range; beyond 32 doublings any u32 fits.
            let k = (stages - i).min(32) as u32;
            let upper = n_min << (k.min(32));
            let ul_ok = (u as u64) >= n_min && (u as u64) < upper;
            let dl_lo = (stages - i) as u64 * n_min;
            let dl_ok = (dl_i as u64) >= dl_lo && (dl_i as u64) < upper;
            if !(ul_ok && dl_ok) {
                passed = false;
                detail = format!(
                    "stage {}: n^U = {u} must lie in [{n_min}, {upper}), n^D = {dl_i} \
                     in [{dl_lo}, {upper})",
                    i + 1
                );
                break;
            }
        }
        checks.push(StructureCheck { name: "geometric_bounds", passed, detail });
    }

    // (d) Stage count inside (log2(R) − 1, R − 1], R = n_max / n_min_ul.
    if !sched.is_empty() {
        let ratio = sched.n_max() as f64 / policy.n_min_ul as f64;
        let stages = sched.attempts() as f64;
        let lower = ratio.log2() - 1.0;
        let upper = ratio - 1.0;
        let passed = stages > lower && stages <= upper;
        checks.push(StructureCheck {
            name: "stage_count_bounds",
            passed,
            detail: format!(
                "I = {stages} vs ({lower:.3}, {upper:.3}] at R = {ratio:.3}"
            ),
        });
    }

    StructureReport { checks }
}

/// Exhaustive reference optimizer: enumerate *every* nested schedule of
/// `n_max` symbols and return the best reward with its (smallest-first-slot
/// tie-broken) schedule. Exponential in `n_max / n_min` — usable only as a
/// test oracle on toy instances, guarded by a node budget.
///
/// Errors: instances whose enumeration tree exceeds ~5·10⁶ nodes.
pub fn exhaustive_reference(
    ul: &ChannelSpec,
    dl: &ChannelSpec,
    params: &FblParams,
    n_max: u32,
) -> Result<(f64, Schedule)> {
    const NODE_BUDGET: u64 = 5_000_000;
    let n_min_ul = fbl::min_blocklength(ul, params);
    let n_min_dl = fbl::min_blocklength(dl, params);
    let eps_ul = fbl::error_rate_table(ul, n_max, params.packet_bits);
    let eps_dl = fbl::error_rate_table(dl, n_max, params.packet_bits);

    struct Search<'a> {
        eps_ul: &'a [f64],
        eps_dl: &'a [f64],
        n_min_ul: u32,
        n_min_dl: u32,
        nodes: u64,
    }

    impl Search<'_> {
        /// Best reward from `n` remaining symbols over all nested
        /// schedules, together with the realizing slot sequence; pure
        /// recursion, no memoization (this is the point of the oracle).
        fn best(&mut self, n: u32) -> Result<(f64, Vec<u32>)> {
            self.nodes += 1;
            if self.nodes > NODE_BUDGET {
                return Err(ClarqError::Config(
                    "exhaustive reference exceeded its node budget; shrink the instance"
                        .into(),
                ));
            }
            if n < self.n_min_ul + self.n_min_dl {
                return Ok((0.0, Vec::new()));
            }
            let mut best_reward = f64::NEG_INFINITY;
            let mut best_slots = Vec::new();
            for m in self.n_min_ul..=(n - self.n_min_dl) {
                let (continuation, mut slots) = self.best(n - m)?;
                let reward = (1.0 - self.eps_ul[m as usize])
                    * (1.0 - self.eps_dl[(n - m) as usize])
                    + self.eps_ul[m as usize] * continuation;
                // Also consider *stopping* after this stage even when a
                // continuation exists: the reward with zero continuation.
                let stop_reward = (1.0 - self.eps_ul[m as usize])
                    * (1.0 - self.eps_dl[(n - m) as usize]);
                let (reward, slots) = if reward >= stop_reward {
                    slots.insert(0, m);
                    (reward, slots)
                } else {
                    (stop_reward, vec![m])
                };
                if reward > best_reward {
                    best_reward = reward;
                    best_slots = slots;
                }
            }
            Ok((best_reward, best_slots))
        }
    }

    let mut search = Search {
        eps_ul: &eps_ul,
        eps_dl: &eps_dl,
        n_min_ul,
        n_min_dl,
        nodes: 0,
    };
    let (value, slots) = search.best(n_max)?;
    if slots.is_empty() {
        return Ok((0.0, Schedule::empty()));
    }
    let final_dl = n_max - slots.iter().sum::<u32>();
    Ok((value, Schedule::new(slots, final_dl)))
}

// ---------------------------------------------------------------------------
// Serialization: versioned little-endian binary plus a tabular text form.
// ---------------------------------------------------------------------------

/// Magic bytes of the binary policy format.
pub const POLICY_MAGIC: &[u8; 8] = b"CLRQPOL1";
/// Current binary policy format version.
pub const POLICY_VERSION: u32 = 1;

/// Write a policy as the versioned binary record: magic, version, channel
/// parameters, slot minima, `n_max`, then `Φ` as 32-bit integers and `Ξ`
/// as 64-bit reals, all little-endian.
pub fn write_policy<W: Write>(policy: &DpPolicy, mut w: W) -> Result<()> {
    w.write_all(POLICY_MAGIC)?;
    w.write_u32::<LittleEndian>(POLICY_VERSION)?;
    w.write_f64::<LittleEndian>(policy.ul_snr_linear)?;
    w.write_f64::<LittleEndian>(policy.dl_snr_linear)?;
    w.write_u32::<LittleEndian>(policy.packet_bits)?;
    w.write_f64::<LittleEndian>(policy.eps_max)?;
    w.write_u32::<LittleEndian>(policy.n_min_ul)?;
    w.write_u32::<LittleEndian>(policy.n_min_dl)?;
    w.write_u32::<LittleEndian>(policy.n_max)?;
    for &p in &policy.phi {
        w.write_u32::<LittleEndian>(p)?;
    }
    for &x in &policy.xi {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

/// Read a policy written by [`write_policy`], validating magic, version and
/// table lengths.
pub fn read_policy<R: Read>(mut r: R) -> Result<DpPolicy> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != POLICY_MAGIC {
        return Err(ClarqError::Format("bad policy magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != POLICY_VERSION {
        return Err(ClarqError::Format(format!(
            "unsupported policy version {version} (expected {POLICY_VERSION})"
        )));
    }
    let ul_snr_linear = r.read_f64::<LittleEndian>()?;
    let dl_snr_linear = r.read_f64::<LittleEndian>()?;
    let packet_bits = r.read_u32::<LittleEndian>()?;
    let eps_max = r.read_f64::<LittleEndian>()?;
    let n_min_ul = r.read_u32::<LittleEndian>()?;
    let n_min_dl = r.read_u32::<LittleEndian>()?;
    let n_max = r.read_u32::<LittleEndian>()?;
    let size = n_max as usize + 1;
    let mut phi = Vec::with_capacity(size);
    for _ in 0..size {
        phi.push(r.read_u32::<LittleEndian>()?);
    }
    let mut xi = Vec::with_capacity(size);
    for _ in 0..size {
        xi.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(DpPolicy {
        phi,
        xi,
        n_min_ul,
        n_min_dl,
        n_max,
        ul_snr_linear,
        dl_snr_linear,
        packet_bits,
        eps_max,
    })
}

/// Save a policy to a file in the binary format.
pub fn save_policy(policy: &DpPolicy, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_policy(policy, std::io::BufWriter::new(file))
}

/// Load a policy from a file in the binary format.
pub fn load_policy(path: &Path) -> Result<DpPolicy> {
    let file = std::fs::File::open(path)?;
    read_policy(std::io::BufReader::new(file))
}

/// Human-readable tabular form: a `#`-commented header followed by
/// tab-separated `n`, `Φ[n]`, `Ξ[n]` rows.
pub fn write_policy_text<W: Write>(policy: &DpPolicy, mut w: W) -> Result<()> {
    writeln!(w, "# clarq policy v{POLICY_VERSION}")?;
    writeln!(
        w,
        "# ul_snr_linear={} dl_snr_linear={} packet_bits={} eps_max={}",
        policy.ul_snr_linear, policy.dl_snr_linear, policy.packet_bits, policy.eps_max
    )?;
    writeln!(
        w,
        "# n_min_ul={} n_min_dl={} n_max={}",
        policy.n_min_ul, policy.n_min_dl, policy.n_max
    )?;
    writeln!(w, "n\tphi\txi")?;
    for n in 0..=(policy.n_max as usize) {
        writeln!(w, "{n}\t{}\t{:.17e}", policy.phi[n], policy.xi[n])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneshot;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> FblParams {
        FblParams::new(16, 0.2).unwrap()
    }

    fn symmetric() -> ChannelSpec {
        ChannelSpec::from_linear(0.05).unwrap()
    }

    fn policy_a_2500() -> DpPolicy {
        let ch = symmetric();
        solve_policy(&ch, &ch, &params(), 2500)
    }

    #[test]
    fn reference_first_slots() {
        let policy = policy_a_2500();
        assert_eq!(policy.phi[924], 462); // terminal equal split
        assert_eq!(policy.phi[1598], 674);
        assert_eq!(policy.phi[2500], 902);
    }

    #[test]
    fn reference_schedule_extraction() {
        let policy = policy_a_2500();
        let sched = extract_schedule(&policy, 2500);
        assert_eq!(sched.ul_slots, vec![902, 674, 462]);
        assert_eq!(sched.final_dl, 462);
        assert_eq!(sched.attempts(), 3);
        assert_eq!(sched.n_max(), 2500);
        assert_eq!(sched.dl_slots(), vec![1598, 924, 462]);
    }

    #[test]
    fn reference_loop_error() {
        // Frozen oracle: 7.81473e-8.
        let ch = symmetric();
        let policy = policy_a_2500();
        let sched = extract_schedule(&policy, 2500);
        let reliability = loop_reliability(&sched, &ch, &ch, &params());
        assert_relative_eq!(1.0 - reliability, 7.81473e-8, max_relative = 1e-4);
        // The DP's own value at the root must agree with the evaluator.
        assert_relative_eq!(reliability, policy.xi[2500], max_relative = 1e-12);
    }

    #[test]
    fn asymmetric_reference_schedule() {
        // Frozen oracle for the asymmetric pair γ^U = 0.07, γ^D = 0.03.
        let ul = ChannelSpec::from_linear(0.07).unwrap();
        let dl = ChannelSpec::from_linear(0.03).unwrap();
        let policy = solve_policy(&ul, &dl, &params(), 2500);
        assert_eq!((policy.n_min_ul, policy.n_min_dl), (232, 533));
        let sched = extract_schedule(&policy, 2500);
        assert_eq!(sched.ul_slots, vec![337, 334, 329, 321, 309, 299]);
        assert_eq!(sched.final_dl, 571);
        let err = 1.0 - loop_reliability(&sched, &ul, &dl, &params());
        assert_relative_eq!(err, 1.918749e-6, max_relative = 1e-4);
    }

    #[test]
    fn degenerate_budget_gives_empty_schedule() {
        let ch = symmetric();
        let policy = solve_policy(&ch, &ch, &params(), 643);
        let sched = extract_schedule(&policy, 643);
        assert!(sched.is_empty());
        assert_eq!(sched.attempts(), 0);
        assert_eq!(loop_reliability(&sched, &ch, &ch, &params()), 0.0);
        // Below the minima: phi[n] = n, xi[n] = 0.
        assert_eq!(policy.phi[643], 643);
        assert_eq!(policy.xi[643], 0.0);
    }

    #[test]
    fn xi_is_nondecreasing_and_bounded() {
        let policy = policy_a_2500();
        for n in 1..=2500usize {
            assert!(policy.xi[n] >= policy.xi[n - 1] - 1e-15, "xi dips at {n}");
            assert!((0.0..=1.0).contains(&policy.xi[n]));
        }
    }

    #[test]
    fn bellman_consistency_recheck() {
        // Recompute the max from the stored tables at sampled states.
        let ch = symmetric();
        let policy = policy_a_2500();
        let eps = fbl::error_rate_table(&ch, 2500, 16);
        for n in [644usize, 900, 1234, 1800, 2500] {
            let mut best = f64::NEG_INFINITY;
            for m in (policy.n_min_ul as usize)..=(n - policy.n_min_dl as usize) {
                let r = (1.0 - eps[m]) * (1.0 - eps[n - m]) + eps[m] * policy.xi[n - m];
                best = best.max(r);
            }
            assert_relative_eq!(policy.xi[n], best, max_relative = 1e-14);
            let m = policy.phi[n] as usize;
            let at_phi = (1.0 - eps[m]) * (1.0 - eps[n - m]) + eps[m] * policy.xi[n - m];
            assert_relative_eq!(at_phi, best, max_relative = 1e-14);
        }
    }

    #[test]
    fn toy_instance_matches_exhaustive_reference() {
        // High-SNR toy: n_min = 5 per direction, n_max = 25; every nested
        // schedule is enumerable.
        let ch = ChannelSpec::from_linear(20.0).unwrap();
        let toy_params = FblParams::new(16, 0.2).unwrap();
        assert_eq!(fbl::min_blocklength(&ch, &toy_params), 5);
        let policy = solve_policy(&ch, &ch, &toy_params, 25);
        let (oracle_value, oracle_sched) =
            exhaustive_reference(&ch, &ch, &toy_params, 25).unwrap();
        assert_relative_eq!(policy.xi[25], oracle_value, max_relative = 1e-14);
        assert_eq!(extract_schedule(&policy, 25), oracle_sched);
        // Full-table agreement, not just the root.
        for n in 1..=25u32 {
            let (v, s) = exhaustive_reference(&ch, &ch, &toy_params, n).unwrap();
            assert_relative_eq!(policy.xi[n as usize], v, max_relative = 1e-14);
            assert_eq!(extract_schedule(&policy, n), s);
        }
    }

    #[test]
    fn energy_stats_reference_values() {
        let ch = symmetric();
        let policy = policy_a_2500();
        let sched = extract_schedule(&policy, 2500);
        let stats = energy_stats(&sched, &ch, &ch, &params(), 1.0);
        assert_eq!(stats.min_ul_energy, 902.0);
        assert_eq!(stats.max_ul_energy, 2038.0);
        assert!(stats.min_ul_energy <= stats.expected_ul_energy);
        assert!(stats.expected_ul_energy <= stats.max_ul_energy);
        assert_relative_eq!(stats.loop_error, 1.0 - stats.loop_reliability);
        // ε(902) ≈ 1.1e-4 makes retransmissions rare: expected barely
        // exceeds the first attempt.
        assert!(stats.expected_ul_energy < 903.0);
    }

    #[test]
    fn energy_stats_single_attempt_degenerates() {
        let ch = symmetric();
        let sched = Schedule::new(vec![400], 300);
        let stats = energy_stats(&sched, &ch, &ch, &params(), 2.0);
        assert_eq!(stats.expected_ul_energy, 800.0);
        assert_eq!(stats.min_ul_energy, 800.0);
        assert_eq!(stats.max_ul_energy, 800.0);
    }

    #[test]
    fn energy_stats_certain_failure_spends_everything() {
        // A channel whose capacity is far below the rate: every attempt
        // fails with probability ≈ 1 in double precision, so the expected
        // energy equals the worst case.
        let ch = ChannelSpec::from_linear(0.001).unwrap();
        let sched = Schedule::new(vec![100, 100], 100);
        let stats = energy_stats(&sched, &ch, &ch, &FblParams::new(16, 0.5).unwrap(), 1.0);
        assert_relative_eq!(stats.expected_ul_energy, stats.max_ul_energy);
    }

    #[test]
    fn structure_report_reference_schedule() {
        let policy = policy_a_2500();
        let sched = extract_schedule(&policy, 2500);
        let report = verify_structure(&sched, &policy, true);
        assert!(report.all_passed(), "failures: {:?}", report.failures());
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn structure_report_catches_swapped_slots() {
        let policy = policy_a_2500();
        // Swap the first two uplink slots: 674 before 902.
        let perturbed = Schedule::new(vec![674, 902, 462], 462);
        let report = verify_structure(&perturbed, &policy, true);
        assert!(report.failures().contains(&"ul_monotone"));
    }

    #[test]
    fn structure_single_stage_is_vacuous() {
        let ch = symmetric();
        let policy = solve_policy(&ch, &ch, &params(), 700);
        let sched = extract_schedule(&policy, 700);
        assert_eq!(sched.attempts(), 1);
        let report = verify_structure(&sched, &policy, true);
        assert!(report.all_passed(), "failures: {:?}", report.failures());
    }

    #[test]
    fn optimal_dominates_baselines() {
        let ch = symmetric();
        let p = params();
        for n_max in [700u32, 924, 1200, 1598, 2500] {
            let policy = solve_policy(&ch, &ch, &p, n_max);
            let optimal = policy.xi[n_max as usize];
            let naive = loop_reliability(&oneshot::naive_schedule(&ch, &ch, &p, n_max), &ch, &ch, &p);
            let one_shot = oneshot::solve_one_shot(&ch, &ch, &p, n_max)
                .unwrap()
                .loop_reliability;
            assert!(optimal >= naive - 1e-15, "optimal < naive at {n_max}");
            assert!(naive >= one_shot - 1e-15, "naive < one-shot at {n_max}");
        }
    }

    #[test]
    fn binary_round_trip_is_lossless() {
        let policy = {
            let ch = symmetric();
            solve_policy(&ch, &ch, &params(), 800)
        };
        let mut buf = Vec::new();
        write_policy(&policy, &mut buf).unwrap();
        let reread = read_policy(buf.as_slice()).unwrap();
        assert_eq!(policy, reread);
    }

    #[test]
    fn binary_format_rejects_corruption() {
        let policy = {
            let ch = symmetric();
            solve_policy(&ch, &ch, &params(), 700)
        };
        let mut buf = Vec::new();
        write_policy(&policy, &mut buf).unwrap();
        buf[0] ^= 0xFF; // break the magic
        assert!(matches!(
            read_policy(buf.as_slice()),
            Err(ClarqError::Format(_))
        ));
        let mut truncated = Vec::new();
        write_policy(&policy, &mut truncated).unwrap();
        truncated.truncate(truncated.len() - 4);
        assert!(read_policy(truncated.as_slice()).is_err());
    }

    #[test]
    fn text_form_contains_reference_rows() {
        let policy = policy_a_2500();
        let mut buf = Vec::new();
        write_policy_text(&policy, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("n\tphi\txi"));
        assert!(text.contains("\n2500\t902\t"));
    }

    #[test]
    fn validity_warning_triggers_beyond_ceiling() {
        let sched = Schedule::new(vec![4200, 500], 400);
        assert!(sched.validity_warning(FBL_VALIDITY_CEILING).is_some());
        let ok = Schedule::new(vec![902, 674, 462], 462);
        assert!(ok.validity_warning(FBL_VALIDITY_CEILING).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Random mid-size instances: table invariants and the dominance
        /// ordering hold regardless of channel asymmetry.
        #[test]
        fn random_instance_invariants(
            ul_snr in 0.03f64..1.5,
            dl_snr in 0.03f64..1.5,
            n_max in 120u32..420,
        ) {
            let ul = ChannelSpec::from_linear(ul_snr).unwrap();
            let dl = ChannelSpec::from_linear(dl_snr).unwrap();
            let p = FblParams::new(16, 0.2).unwrap();
            let policy = solve_policy(&ul, &dl, &p, n_max);

            // xi monotone in [0, 1].
            for n in 1..=(n_max as usize) {
                prop_assert!(policy.xi[n] >= policy.xi[n - 1] - 1e-15);
                prop_assert!((0.0..=1.0).contains(&policy.xi[n]));
            }

            let sched = extract_schedule(&policy, n_max);
            if sched.is_empty() {
                prop_assert!(n_max < policy.n_min_ul + policy.n_min_dl);
                return Ok(());
            }

            // Extraction respects minima and consumes the whole budget.
            prop_assert!(sched.ul_slots.iter().all(|&m| m >= policy.n_min_ul));
            prop_assert!(sched.dl_slots().iter().all(|&m| m >= policy.n_min_dl));
            prop_assert_eq!(sched.n_max(), n_max);

            // The evaluator agrees with the table's root value.
            let rel = loop_reliability(&sched, &ul, &dl, &p);
            prop_assert!((rel - policy.xi[n_max as usize]).abs() <= 1e-12);

            // Dominance over both baselines.
            let naive = loop_reliability(
                &oneshot::naive_schedule(&ul, &dl, &p, n_max), &ul, &dl, &p);
            let one_shot = oneshot::solve_one_shot(&ul, &dl, &p, n_max)
                .unwrap().loop_reliability;
            prop_assert!(rel >= naive - 1e-15);
            prop_assert!(naive >= one_shot - 1e-15);
        }
    }
}
