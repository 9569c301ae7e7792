//! Discrete-event validation: play the optimal policy against sampled
//! packet failures, frame by frame, and compare the empirical loop error
//! and uplink cost with the closed-form predictions.
//!
//! Run with: cargo run --example protocol_simulation

use clarq::dp::{energy_stats, extract_schedule, solve_policy};
use clarq::scenario::scenario_a;
use clarq::sim::{run_frames, ScheduleSource, SimConfig};

fn main() -> clarq::Result<()> {
    let mut sc = scenario_a();
    // A deliberately tight frame so failures are frequent enough to see.
    sc.budget.frame_time = 1200.0 * sc.budget.symbol_time;
    let n_max = sc.n_max();

    let policy = solve_policy(&sc.ul, &sc.dl, &sc.params, n_max);
    let sched = extract_schedule(&policy, n_max);
    let analytic = energy_stats(&sched, &sc.ul, &sc.dl, &sc.params, 1.0);

    let cfg = SimConfig {
        frames: 200_000,
        seed: 7,
        source: ScheduleSource::Policy(policy),
        budget: sc.budget,
    };
    let summary = run_frames(&cfg, &sc.ul, &sc.dl, &sc.params)?;

    println!("simulated {} frames at n_max = {n_max}", summary.frames);
    println!();
    println!("{:<26} {:>14} {:>14}", "", "empirical", "analytic");
    println!(
        "{:<26} {:>14.6e} {:>14.6e}",
        "loop error", summary.empirical_loop_error, analytic.loop_error
    );
    println!(
        "{:<26} {:>14.2} {:>14.2}",
        "mean ul symbols per frame", summary.mean_ul_symbols, analytic.expected_ul_energy
    );
    println!();
    println!("uplink attempts per frame:");
    for (attempts, frames) in summary.attempt_histogram.iter().enumerate() {
        if *frames > 0 {
            println!("  {attempts} attempts: {frames} frames");
        }
    }
    println!();
    println!(
        "95th percentile ul cost {} symbols; max elapsed {:.1} us (deadline {:.1} us)",
        summary.ul_symbols_percentile(0.95),
        summary.max_elapsed_time * 1e6,
        sc.budget.frame_time * 1e6
    );
    Ok(())
}
