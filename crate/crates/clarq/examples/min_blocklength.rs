//! Finite-blocklength basics: packet error rate as a function of slot
//! length, and the shortest slot that meets a per-attempt error ceiling.
//!
//! Run with: cargo run --example min_blocklength

use clarq::fbl::{self, ChannelSpec, FblParams};

fn main() -> clarq::Result<()> {
    let params = FblParams::new(16, 0.2)?; // 16-bit packets, eps_max = 0.2

    println!("packet error rate vs slot length at -13 dB SNR");
    let ch = ChannelSpec::from_linear(0.05)?;
    for n in [250, 322, 400, 600, 900, 1200] {
        let eps = fbl::packet_error_rate(&ch, n, params.packet_bits);
        println!("  n = {n:>5}  eps = {eps:.6e}");
    }

    println!();
    println!("minimum admissible slot length vs SNR (eps_max = {})", params.eps_max);
    println!("  {:>8}  {:>10}  {:>6}", "snr_db", "snr_linear", "n_min");
    for snr_db in [-16.0, -15.0, -13.0, -11.0, -9.0, -6.0, -3.0, 0.0] {
        let ch = ChannelSpec::from_db(snr_db)?;
        let n_min = fbl::min_blocklength(&ch, &params);
        println!("  {snr_db:>8.1}  {:>10.5}  {n_min:>6}", ch.snr_linear);
    }

    // The defining property of n_min: one symbol fewer violates the ceiling.
    let ch = ChannelSpec::from_linear(0.05)?;
    let n_min = fbl::min_blocklength(&ch, &params);
    let at = fbl::packet_error_rate(&ch, n_min, params.packet_bits);
    let below = fbl::packet_error_rate(&ch, n_min - 1, params.packet_bits);
    println!();
    println!("at snr 0.05 (linear): n_min = {n_min}");
    println!("  eps(n_min)     = {at:.6} <= {}", params.eps_max);
    println!("  eps(n_min - 1) = {below:.6} >  {}", params.eps_max);
    Ok(())
}
