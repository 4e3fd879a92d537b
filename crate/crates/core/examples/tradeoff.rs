//! Areas, NOMA/mMIMO ratios and SE-EE trade-off points under both
//! selection criteria.

use noma_mimo_sim::metrics::TradeoffCriterion;
use noma_mimo_sim::{run_sweep, summarize, Preset};

fn main() -> noma_mimo_sim::Result<()> {
    let mut cfg = Preset::PaperM64.config();
    cfg.sweep.trials = 200;
    let summary = summarize(&run_sweep(&cfg)?)?;

    for a in &summary.areas {
        println!("{:<6} {:<6} S = {:.4}  E = {:.6}", a.system, a.policy, a.se_area, a.ee_area);
    }
    for r in &summary.ratios {
        println!("{:<7} NOMA/mMIMO: S x{:.2}  E x{:.2}", r.policy, r.se_ratio.unwrap_or(f64::NAN), r.ee_ratio.unwrap_or(f64::NAN));
    }
    for criterion in TradeoffCriterion::ALL {
        println!("\n{criterion}");
        println!("{:<12} {:>6} {:>8} {:>7} {:>7} {:>6}", "", "rho", "SE", "EE", "active", "F");
        for t in summary.tradeoff.iter().filter(|t| t.criterion == criterion) {
            println!(
                "{:<12} {:>6.3} {:>8.2} {:>7.4} {:>7.2} {:>6.3}",
                format!("{}-{}", t.system, t.policy),
                t.rho,
                t.se,
                t.ee,
                t.active_frac,
                t.fairness
            );
        }
    }
    Ok(())
}
