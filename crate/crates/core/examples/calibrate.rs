//! Fits the reference distance of the normalized pathloss model.
//!
//! The target is the WF-mMIMO sum rate at its trade-off loading for
//! M = 64, 128, 256 (bits/s/Hz). The objective is the squared log error
//! summed over the three points; a coarse log-spaced scan is followed by a
//! golden-section refinement.

use noma_mimo_sim::geometry::drop_devices;
use noma_mimo_sim::power::{allocate, Policy, System};
use noma_mimo_sim::rates::mimo_rates;
use noma_mimo_sim::rng::substream;
use noma_mimo_sim::SystemConfig;

/// (M, loading, sum rate)
const TARGETS: [(usize, f64, f64); 3] = [(64, 0.652, 131.15), (128, 0.625, 243.21), (256, 0.578, 404.84)];
const TRIALS: usize = 200;

fn mean_wf_rate(d_ref: f64, m: usize, rho: f64) -> f64 {
    let k = 2 * ((rho * m as f64) / 2.0).round() as usize;
    let mut cfg = SystemConfig::default().with_antennas(m).with_devices(k);
    cfg.d_ref = d_ref;
    let total: f64 = (0..TRIALS)
        .map(|t| {
            let drop = drop_devices(&cfg, &mut substream(7, &[k as u64, t as u64])).unwrap();
            let a = allocate(&cfg, &drop, None, System::Mmimo, Policy::Wf).unwrap();
            mimo_rates(&cfg, &drop, &a).unwrap().sum_rate
        })
        .sum();
    total / TRIALS as f64
}

fn objective(d_ref: f64) -> f64 {
    TARGETS
        .iter()
        .map(|&(m, rho, se)| (mean_wf_rate(d_ref, m, rho).ln() - se.ln()).powi(2))
        .sum()
}

fn main() {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=24 {
        let d = 50.0 * 20f64.powf(i as f64 / 24.0);
        let f = objective(d);
        println!("d_ref {d:>8.1} m  objective {f:.5}");
        if f < best.0 {
            best = (f, d);
        }
    }
    let step = 20f64.powf(1.0 / 24.0);
    let (mut a, mut b) = (best.1 / step, best.1 * step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..30 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if objective(x1) < objective(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let d = 0.5 * (a + b);
    println!("\nbest d_ref = {d:.1} m (objective {:.5})", objective(d));
    for &(m, rho, se) in &TARGETS {
        println!("  M={m:<4} rho={rho}: model {:.2} vs target {se}", mean_wf_rate(d, m, rho));
    }
}
