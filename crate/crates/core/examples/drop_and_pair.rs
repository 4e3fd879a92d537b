//! Drop devices in the two annuli and form NOMA clusters.
//!
//! cargo run --example drop_and_pair -- [K] [seed]

use noma_mimo_sim::geometry::{drop_devices, partition_and_pair};
use noma_mimo_sim::rng::substream;
use noma_mimo_sim::SystemConfig;

fn main() -> noma_mimo_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map(|a| a.parse().expect("K")).unwrap_or(8);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);

    let cfg = SystemConfig::default().with_devices(k);
    let drop = drop_devices(&cfg, &mut substream(seed, &[k as u64]))?;
    println!("{:>3} {:>8} {:>7} {:>12}", "id", "d [m]", "angle", "beta");
    for (i, ((d, a), b)) in drop.distances.iter().zip(&drop.angles).zip(&drop.beta).enumerate() {
        println!("{i:>3} {d:>8.1} {a:>7.3} {b:>12.4e}");
    }

    let c = partition_and_pair(&drop)?;
    println!("\n{:>7} {:>6} {:>6} {:>12} {:>12} {:>12}", "cluster", "center", "edge", "beta_c", "beta_e", "delta");
    for (j, (ci, ei)) in c.pairs().enumerate() {
        println!(
            "{j:>7} {ci:>6} {ei:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
            c.center_beta[j], c.edge_beta[j], c.delta_beta[j]
        );
    }
    Ok(())
}
