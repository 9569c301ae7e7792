//! Single-attempt baseline: split one blocklength budget between the
//! uplink packet and the downlink reply to maximize loop reliability.
//!
//! Run with: cargo run --example one_shot_split

use clarq::fbl::{ChannelSpec, FblParams};
use clarq::oneshot::solve_one_shot;

fn main() -> clarq::Result<()> {
    let params = FblParams::new(16, 0.2)?;

    // Symmetric links: the optimal split is (near) even.
    let ch = ChannelSpec::from_linear(0.05)?;
    println!("symmetric links at -13 dB, growing budget:");
    for n_total in [700, 900, 1200, 1600, 2000, 2500] {
        match solve_one_shot(&ch, &ch, &params, n_total) {
            Ok(split) => println!(
                "  n = {n_total:>5}: ul {:>5}, dl {:>5}, loop error {:.4e}",
                split.n_ul,
                split.n_dl,
                1.0 - split.loop_reliability
            ),
            Err(e) => println!("  n = {n_total:>5}: {e}"),
        }
    }

    // Asymmetric links: the weaker direction claims the larger share.
    let ul = ChannelSpec::from_linear(0.07)?;
    let dl = ChannelSpec::from_linear(0.03)?;
    let split = solve_one_shot(&ul, &dl, &params, 2500)?;
    println!();
    println!("asymmetric links (ul -11 dB, dl -15 dB) at n = 2500:");
    println!(
        "  ul {} (eps {:.4e})  dl {} (eps {:.4e})  loop error {:.4e}",
        split.n_ul,
        split.eps_ul,
        split.n_dl,
        split.eps_dl,
        1.0 - split.loop_reliability
    );
    Ok(())
}
