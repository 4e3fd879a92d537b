//! Full loading sweep for one antenna count, written to a directory.
//!
//! cargo run --release --example loading_sweep -- [M] [trials] [out]

use std::path::PathBuf;

use noma_mimo_sim::harness::{write_json, write_sweep_csv};
use noma_mimo_sim::{run_sweep, summarize, Combo, RunConfig};

fn main() -> noma_mimo_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    cfg.scenario.antennas = args.next().map(|a| a.parse().expect("M")).unwrap_or(32);
    cfg.sweep.trials = args.next().map(|a| a.parse().expect("trials")).unwrap_or(100);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "sweep-example".into()));

    let result = run_sweep(&cfg)?;
    let summary = summarize(&result)?;
    std::fs::create_dir_all(&out).expect("create output directory");
    write_sweep_csv(&result, &out.join("sweep.csv"))?;
    write_json(&summary, &out.join("summary.json"))?;

    // SE at a few loadings
    print!("{:>6}", "rho");
    for c in Combo::all() {
        print!(" {:>12}", c.to_string());
    }
    println!();
    for g in result.grid.iter().step_by((result.grid.len() / 8).max(1)) {
        print!("{:>6.3}", g.rho);
        for c in Combo::all() {
            match result.at(c, g.k) {
                Some(s) => print!(" {:>12.2}", s.se_mean),
                None => print!(" {:>12}", "-"),
            }
        }
        println!();
    }
    for p in &summary.peaks {
        println!("peak {}-{}: {:.2} bits/s/Hz at rho {:.3}", p.system, p.policy, p.se, p.rho);
    }
    println!("wrote {}", out.display());
    Ok(())
}
