//! Closed-form rates, consumed power and energy efficiency for mMIMO and
//! NOMA on the same drop as the loading grows.

use noma_mimo_sim::energy::{energy_efficiency, total_power};
use noma_mimo_sim::geometry::{drop_devices, partition_and_pair};
use noma_mimo_sim::metrics::jain_index;
use noma_mimo_sim::power::{allocate, Policy, System};
use noma_mimo_sim::rates::{mimo_rates, noma_in_range, noma_rates};
use noma_mimo_sim::rng::substream;
use noma_mimo_sim::{EnergyParams, SystemConfig};

fn main() -> noma_mimo_sim::Result<()> {
    let energy = EnergyParams::default();
    let m = 64;
    println!(
        "{:>4} {:>6} {:>9} {:>10} {:>9} {:>10} {:>8} {:>8}",
        "K", "rho", "P_tot[W]", "SE mMIMO", "EE mMIMO", "SE NOMA", "EE NOMA", "F NOMA"
    );
    for k in (8..=2 * m).step_by(8) {
        let cfg = SystemConfig::default().with_antennas(m).with_devices(k);
        let drop = drop_devices(&cfg, &mut substream(11, &[k as u64]))?;
        let p_tot = total_power(&cfg, &energy)?.total();

        let a = allocate(&cfg, &drop, None, System::Mmimo, Policy::Epa)?;
        let mm = mimo_rates(&cfg, &drop, &a)?;
        let (se_n, ee_n, f_n) = if noma_in_range(m, k) {
            let c = partition_and_pair(&drop)?;
            let a = allocate(&cfg, &drop, Some(&c), System::Noma, Policy::Epa)?;
            let r = noma_rates(&cfg, &c, &a)?;
            (
                format!("{:.2}", r.sum_rate),
                format!("{:.4}", energy_efficiency(r.sum_rate, p_tot)?),
                format!("{:.3}", jain_index(&r.per_device_rate, k)?),
            )
        } else {
            ("-".into(), "-".into(), "-".into())
        };
        println!(
            "{k:>4} {:>6.3} {p_tot:>9.2} {:>10.2} {:>9.4} {se_n:>10} {ee_n:>8} {f_n:>8}",
            cfg.loading(),
            mm.sum_rate,
            energy_efficiency(mm.sum_rate, p_tot)?
        );
    }

    let b = total_power(&SystemConfig::default().with_antennas(64).with_devices(64), &energy)?;
    println!("\nM = K = 64 breakdown: {b:#?}\ntotal {:.2} W", b.total());
    Ok(())
}
