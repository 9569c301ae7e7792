//! Deployment path: precompute schedules on an SNR grid, store them in a
//! compact binary lookup table, and serve quantized (conservative)
//! schedules at runtime. Ends with the grid-pitch accuracy trade-off.
//!
//! Run with: cargo run --example lut_workflow

use clarq::dp::loop_reliability;
use clarq::fading::FadingModel;
use clarq::fbl::{ChannelSpec, FblParams};
use clarq::lut::{build_lut, load_lut, resolution_experiment, save_lut, LutSpec};

fn main() -> clarq::Result<()> {
    let params = FblParams::new(16, 0.2)?;
    let n_max = 600;

    // Symmetric links -> diagonal table: one entry per grid SNR.
    let spec = LutSpec::new(-5.0, 20.0, 1.0, params, n_max, true)?;
    let lut = build_lut(&spec)?;
    println!(
        "built a {}-entry diagonal table over [{}, {}] dB at {} dB pitch",
        lut.len(),
        spec.snr_min_db,
        spec.snr_max_db,
        spec.step_db
    );

    let dir = std::env::temp_dir().join("clarq_lut_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("schedules.lut");
    save_lut(&lut, &path)?;
    let restored = load_lut(&path)?;
    println!(
        "saved to {} ({} bytes) and reloaded",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    println!();
    println!("runtime lookups (floor quantization keeps schedules feasible):");
    for snr_db in [3.7, 9.99, 10.0, 14.2] {
        let sched = restored.lookup(snr_db, snr_db);
        let ch = ChannelSpec::from_db(snr_db)?;
        let err = 1.0 - loop_reliability(&sched, &ch, &ch, &params);
        println!(
            "  snr {snr_db:>6.2} dB -> {:>3} attempts, first ul slot {:>3}, \
             final dl {:>3}, loop error at true snr {err:.2e}",
            sched.attempts(),
            sched.ul_slots.first().copied().unwrap_or(0),
            sched.final_dl
        );
    }

    // How coarse may the grid be? Compare pitches on one fading campaign.
    let model = FadingModel::new(10.0, 3.0, true, 10.0, true)?;
    let table = resolution_experiment(&[16.0, 8.0, 4.0, 2.0, 1.0], &model, &params, n_max, 800, 42)?;
    println!();
    println!("mean loop error over 800 fading draws:");
    for row in &table.rows {
        println!("  {:>4} dB pitch  {:.4e}", row.step_db, row.mean_loop_error);
    }
    println!("  exact solver  {:.4e}", table.exact_mean_loop_error);
    Ok(())
}
