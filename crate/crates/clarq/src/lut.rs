//! Quantized-SNR lookup tables for O(I) runtime deployment.
//!
//! Solving the blocklength dynamic program is an offline job; a deployed
//! device only needs the *extracted schedule* for the channel it measures.
//! A table over a quantized (uplink SNR × downlink SNR) grid therefore
//! stores schedules, not policy tables: once the frame budget and channel
//! are fixed, the nesting rule determines every stage, so a device never
//! re-enters the table mid-frame and each entry costs O(I) memory.
//!
//! Lookups quantize each axis with *floor* semantics (nearest grid point at
//! or below the measured SNR). Floor quantization is the conservative
//! choice: minimal slot lengths shrink as SNR grows, so a schedule feasible
//! at the quantized-down SNR keeps every slot at or above the true
//! channel's minima. Out-of-range measurements clamp to the grid edge; a
//! measurement below the lowest point gets that point's entry, which may be
//! the empty schedule.
//!
//! The file format is versioned little-endian binary: magic `CLRQLUT1`, a
//! header echoing the grid spec, then row-major entries as length-prefixed
//! 16-bit slot lists (`[n^U_1 … n^U_I, n^D_I]`, empty list for infeasible
//! points). A text export exists for inspection.

use crate::dp::{extract_schedule, solve_policy, Schedule};
use crate::fading::{run_campaign, FadingModel, Strategy};
use crate::fbl::{self, ChannelSpec, FblParams};
use crate::{ClarqError, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Grid description for a lookup table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LutSpec {
    /// Lowest grid SNR per axis, dB.
    pub snr_min_db: f64,
    /// Highest covered SNR per axis, dB (the last grid point is the
    /// largest `snr_min_db + k·step_db` not exceeding this).
    pub snr_max_db: f64,
    /// Grid pitch, dB, > 0.
    pub step_db: f64,
    /// Payload and reliability constraint all entries are built for.
    pub params: FblParams,
    /// Frame blocklength budget all entries are built for.
    pub n_max: u32,
    /// Store only the diagonal (symmetric-deployment mode): one entry per
    /// grid SNR, used for both directions.
    pub diagonal: bool,
}

impl LutSpec {
    /// Validated constructor.
    pub fn new(
        snr_min_db: f64,
        snr_max_db: f64,
        step_db: f64,
        params: FblParams,
        n_max: u32,
        diagonal: bool,
    ) -> Result<Self> {
        if step_db.is_nan() || step_db <= 0.0 || snr_max_db < snr_min_db {
            return Err(ClarqError::Config(format!(
                "LUT grid needs step_db > 0 and snr_max ≥ snr_min \
                 (got [{snr_min_db}, {snr_max_db}] step {step_db})"
            )));
        }
        if n_max > u16::MAX as u32 {
            return Err(ClarqError::Config(format!(
                "n_max = {n_max} exceeds the 16-bit slot representation"
            )));
        }
        Ok(LutSpec { snr_min_db, snr_max_db, step_db, params, n_max, diagonal })
    }

    /// Number of grid points per axis (≥ 1).
    pub fn points_per_axis(&self) -> usize {
        ((self.snr_max_db - self.snr_min_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    /// SNR of grid index `i`, dB.
    pub fn grid_snr_db(&self, i: usize) -> f64 {
        self.snr_min_db + i as f64 * self.step_db
    }

    /// Floor-quantized grid index of a measured SNR, clamped to the grid.
    pub fn quantize(&self, snr_db: f64) -> usize {
        let raw = ((snr_db - self.snr_min_db) / self.step_db + 1e-9).floor();
        (raw.max(0.0) as usize).min(self.points_per_axis() - 1)
    }
}

/// A built lookup table: the spec plus one extracted schedule per grid
/// point. Immutable after construction; lookups are lock-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    /// The grid this table realizes.
    pub spec: LutSpec,
    /// Row-major `[ul_index × dl_index]` entries (or one per grid point in
    /// diagonal mode).
    entries: Vec<Schedule>,
}

/// Solve the policy at every grid point and extract its schedule.
/// Grid points where no schedule fits store the empty schedule. The build
/// is parallel across grid points and deterministic.
pub fn build_lut(spec: &LutSpec) -> Result<Lut> {
    let n = spec.points_per_axis();
    let index_pairs: Vec<(usize, usize)> = if spec.diagonal {
        (0..n).map(|i| (i, i)).collect()
    } else {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
    };
    let entries: Vec<Schedule> = index_pairs
        .into_par_iter()
        .map(|(i, j)| {
            let ul = ChannelSpec::from_db(spec.grid_snr_db(i))?;
            let dl = ChannelSpec::from_db(spec.grid_snr_db(j))?;
            let n_min = fbl::min_blocklength(&ul, &spec.params)
                .saturating_add(fbl::min_blocklength(&dl, &spec.params));
            if n_min > spec.n_max {
                return Ok(Schedule::empty());
            }
            let policy = solve_policy(&ul, &dl, &spec.params, spec.n_max);
            Ok(extract_schedule(&policy, spec.n_max))
        })
        .collect::<Result<_>>()?;
    Ok(Lut { spec: *spec, entries })
}

impl Lut {
    /// Schedule for a measured SNR pair: floor-quantize each axis, clamp to
    /// the grid, and copy that entry — O(1) index arithmetic plus an O(I)
    /// copy. In diagonal mode the lower of the two quantized indices is
    /// used so the entry stays conservative for both directions.
    pub fn lookup(&self, ul_snr_db: f64, dl_snr_db: f64) -> Schedule {
        let i = self.spec.quantize(ul_snr_db);
        let j = self.spec.quantize(dl_snr_db);
        if self.spec.diagonal {
            self.entries[i.min(j)].clone()
        } else {
            self.entries[i * self.spec.points_per_axis() + j].clone()
        }
    }

    /// Entry count actually stored.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the table stores no entries (never after a valid build).
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Borrow an entry by storage index (inspection, tests).
    pub fn entry(&self, idx: usize) -> &Schedule {
        &self.entries[idx]
    }
}

/// Magic bytes of the binary LUT format.
pub const LUT_MAGIC: &[u8; 8] = b"CLRQLUT1";
/// Current binary LUT format version.
pub const LUT_VERSION: u32 = 1;

/// Write a table in the versioned binary format.
pub fn write_lut<W: Write>(lut: &Lut, mut w: W) -> Result<()> {
    let spec = &lut.spec;
    w.write_all(LUT_MAGIC)?;
    w.write_u32::<LittleEndian>(LUT_VERSION)?;
    w.write_f64::<LittleEndian>(spec.snr_min_db)?;
    w.write_f64::<LittleEndian>(spec.snr_max_db)?;
    w.write_f64::<LittleEndian>(spec.step_db)?;
    w.write_u32::<LittleEndian>(spec.params.packet_bits)?;
    w.write_f64::<LittleEndian>(spec.params.eps_max)?;
    w.write_u32::<LittleEndian>(spec.n_max)?;
    w.write_u8(spec.diagonal as u8)?;
    w.write_u64::<LittleEndian>(lut.entries.len() as u64)?;
    for entry in &lut.entries {
        // Length-prefixed 16-bit slot list: [n^U_1 … n^U_I, n^D_I].
        if entry.is_empty() {
            w.write_u16::<LittleEndian>(0)?;
            continue;
        }
        w.write_u16::<LittleEndian>(entry.attempts() as u16 + 1)?;
        for &slot in &entry.ul_slots {
            w.write_u16::<LittleEndian>(slot as u16)?;
        }
        w.write_u16::<LittleEndian>(entry.final_dl as u16)?;
    }
    Ok(())
}

/// Read a table written by [`write_lut`], validating magic, version, and
/// entry counts.
pub fn read_lut<R: Read>(mut r: R) -> Result<Lut> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != LUT_MAGIC {
        return Err(ClarqError::Format("bad LUT magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != LUT_VERSION {
        return Err(ClarqError::Format(format!(
            "unsupported LUT version {version} (expected {LUT_VERSION})"
        )));
    }
    let snr_min_db = r.read_f64::<LittleEndian>()?;
    let snr_max_db = r.read_f64::<LittleEndian>()?;
    let step_db = r.read_f64::<LittleEndian>()?;
    let packet_bits = r.read_u32::<LittleEndian>()?;
    let eps_max = r.read_f64::<LittleEndian>()?;
    let n_max = r.read_u32::<LittleEndian>()?;
    let diagonal = r.read_u8()? != 0;
    let spec = LutSpec::new(
        snr_min_db,
        snr_max_db,
        step_db,
        FblParams::new(packet_bits, eps_max)?,
        n_max,
        diagonal,
    )?;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let expected = if diagonal {
        spec.points_per_axis()
    } else {
        spec.points_per_axis() * spec.points_per_axis()
    };
    if count != expected {
        return Err(ClarqError::Format(format!(
            "entry count {count} does not match the grid ({expected})"
        )));
    }
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.read_u16::<LittleEndian>()? as usize;
        if len == 0 {
            entries.push(Schedule::empty());
            continue;
        }
        let mut slots = Vec::with_capacity(len);
        for _ in 0..len {
            slots.push(r.read_u16::<LittleEndian>()? as u32);
        }
        let final_dl = slots.pop().expect("len ≥ 1");
        entries.push(Schedule::new(slots, final_dl));
    }
    Ok(Lut { spec, entries })
}

/// Save a table to a file in the binary format.
pub fn save_lut(lut: &Lut, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_lut(lut, std::io::BufWriter::new(file))
}

/// Load a table from a file in the binary format.
pub fn load_lut(path: &Path) -> Result<Lut> {
    let file = std::fs::File::open(path)?;
    read_lut(std::io::BufReader::new(file))
}

/// Human-readable export: header comments plus one line per entry with its
/// grid SNRs and slot list.
pub fn write_lut_text<W: Write>(lut: &Lut, mut w: W) -> Result<()> {
    let spec = &lut.spec;
    writeln!(w, "# clarq LUT v{LUT_VERSION}")?;
    writeln!(
        w,
        "# grid [{}, {}] dB step {} ({} points/axis, diagonal={}) n_max={} d={} eps_max={}",
        spec.snr_min_db,
        spec.snr_max_db,
        spec.step_db,
        spec.points_per_axis(),
        spec.diagonal,
        spec.n_max,
        spec.params.packet_bits,
        spec.params.eps_max
    )?;
    writeln!(w, "ul_snr_db\tdl_snr_db\tattempts\tul_slots\tfinal_dl")?;
    let n = spec.points_per_axis();
    for (idx, entry) in lut.entries.iter().enumerate() {
        let (i, j) = if spec.diagonal { (idx, idx) } else { (idx / n, idx % n) };
        let slots = entry
            .ul_slots
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            w,
            "{}\t{}\t{}\t[{slots}]\t{}",
            spec.grid_snr_db(i),
            spec.grid_snr_db(j),
            entry.attempts(),
            entry.final_dl
        )?;
    }
    Ok(())
}

/// One row of the resolution-sensitivity experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ResolutionRow {
    /// Grid pitch this row was measured at, dB.
    pub step_db: f64,
    /// Mean campaign loop error with table-driven allocation.
    pub mean_loop_error: f64,
}

/// Result of [`resolution_experiment`]: per-step means plus the
/// exact-solver floor on the same draws.
#[derive(Debug, Clone, Serialize)]
pub struct ResolutionTable {
    /// One row per requested step, in request order.
    pub rows: Vec<ResolutionRow>,
    /// Mean loop error when every realization is solved exactly.
    pub exact_mean_loop_error: f64,
}

/// Measure how table resolution affects campaign error: for each step
/// size, build a table over the fading model's plausible SNR range and run
/// a paired campaign with table-driven allocation; the exact per-draw
/// solver runs on the same seeds as the floor.
///
/// All grids share the anchor `snr_min`, so grids whose steps divide each
/// other are nested — the configuration under which finer tables can only
/// move each draw's quantized point closer to the truth. The anchor sits
/// far below any feasible channel (base − 4σ − scale − 30 dB), which keeps
/// below-grid clamping inside the infeasible region where every strategy
/// already scores loop error 1.
pub fn resolution_experiment(
    steps_db: &[f64],
    model: &FadingModel,
    params: &FblParams,
    n_max: u32,
    runs: u64,
    seed: u64,
) -> Result<ResolutionTable> {
    if steps_db.is_empty() {
        return Err(ClarqError::Config("no step sizes requested".into()));
    }
    let scale = if model.rayleigh { model.fading_scale_db } else { 0.0 };
    let lo = model.base_snr_db - 4.0 * model.shadow_sigma_db - scale - 30.0;
    let hi = model.base_snr_db + 4.0 * model.shadow_sigma_db - scale + 10.0;

    let mut rows = Vec::with_capacity(steps_db.len());
    for &step in steps_db {
        let spec = LutSpec::new(lo, hi, step, *params, n_max, false)?;
        let lut = build_lut(&spec)?;
        let (_, aggregates) =
            run_campaign(model, &[Strategy::Lut(&lut)], params, n_max, runs, seed)?;
        rows.push(ResolutionRow {
            step_db: step,
            mean_loop_error: aggregates[0].mean_loop_error,
        });
    }
    let (_, exact) = run_campaign(model, &[Strategy::Optimal], params, n_max, runs, seed)?;
    Ok(ResolutionTable {
        rows,
        exact_mean_loop_error: exact[0].mean_loop_error,
    })
}
