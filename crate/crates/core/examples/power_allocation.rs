//! Every (system, policy) combination on one drop: per-device powers,
//! active devices, water levels and SIC margins.

use noma_mimo_sim::config::SicMode;
use noma_mimo_sim::geometry::{drop_devices, partition_and_pair};
use noma_mimo_sim::power::{allocate, sic_feasibility, System};
use noma_mimo_sim::rng::substream;
use noma_mimo_sim::{Combo, SystemConfig};

fn main() -> noma_mimo_sim::Result<()> {
    let cfg = SystemConfig::default().with_antennas(16).with_devices(12);
    let drop = drop_devices(&cfg, &mut substream(3, &[]))?;
    let clustering = partition_and_pair(&drop)?;

    for combo in Combo::all() {
        let a = allocate(&cfg, &drop, Some(&clustering), combo.system, combo.policy)?;
        print!("{combo:<12} total {:.6} W, active {:>2}/{}", a.total_power(), a.active_count(), a.power.len());
        if let Some(mu) = a.water_level {
            print!(", level {mu:.4}");
        }
        println!();
        let p: Vec<String> = a.power.iter().map(|p| format!("{p:.4}")).collect();
        println!("    p = [{}]", p.join(", "));
        if combo.system == System::Noma {
            for mode in [SicMode::EdgeReference, SicMode::PaperEq11] {
                let checks = sic_feasibility(&clustering, &a, &cfg, mode)?;
                let ok = checks.iter().filter(|c| c.feasible).count();
                let worst = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
                println!("    SIC ({mode}): {ok}/{} feasible, worst margin {worst:.3}", checks.len());
            }
        }
    }
    Ok(())
}
