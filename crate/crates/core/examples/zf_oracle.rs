//! Monte-Carlo check of the ZF array gains with explicit channel draws.

use noma_mimo_sim::geometry::{drop_devices, DeviceDrop};
use noma_mimo_sim::oracle::{empirical_array_gain, validate_closed_form};
use noma_mimo_sim::power::{allocate, Policy, System};
use noma_mimo_sim::rng::substream;
use noma_mimo_sim::SystemConfig;

fn main() -> noma_mimo_sim::Result<()> {
    println!("{:>4} {:>4} {:>10} {:>8} {:>8}", "M", "N", "mean", "stderr", "M-N+1");
    for (m, n) in [(8, 1), (8, 2), (16, 8), (32, 8), (32, 16)] {
        let g = empirical_array_gain(m, n, 10_000, 1)?;
        println!("{m:>4} {n:>4} {:>10.4} {:>8.4} {:>8}", g.mean, g.std_err, m - n + 1);
    }

    let cfg = SystemConfig::default().with_antennas(32).with_devices(8);
    let drop = DeviceDrop::from_gains(vec![1.0; 8]);
    let a = allocate(&cfg, &drop, None, System::Mmimo, Policy::Epa)?;
    let r = validate_closed_form(&cfg, &drop, &a, 5_000, 2)?;
    println!(
        "\nmMIMO M=32 K=8: empirical gain {:.3}, bracket {:?}, closed form {} -> ok={}",
        r.empirical_gain.mean, r.bracket, r.closed_form_gain, r.bracket_ok
    );

    let cfg = SystemConfig::default().with_antennas(16).with_devices(8);
    let drop = drop_devices(&cfg, &mut substream(4, &[]))?;
    let a = allocate(&cfg, &drop, None, System::Noma, Policy::Epa)?;
    let r = validate_closed_form(&cfg, &drop, &a, 5_000, 3)?;
    println!(
        "NOMA  M=16 K=8: empirical gain {:.3}, bracket {:?}, closed form {} -> ok={}, leakage {:.1e}",
        r.empirical_gain.mean, r.bracket, r.closed_form_gain, r.bracket_ok, r.max_leakage
    );
    for d in &r.devices_checked {
        println!(
            "  device {:>2} {:<6} closed {:.4} empirical {:.4} rel.err {:.4}",
            d.device, d.role, d.closed_form_rate, d.empirical_rate, d.rel_error
        );
    }
    Ok(())
}
