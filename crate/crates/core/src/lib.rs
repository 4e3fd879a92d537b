//! Downlink spectral- and energy-efficiency comparison of zero-forcing
//! massive MIMO against two-device power-domain NOMA clusters.
//!
//! The pipeline for one Monte-Carlo drop:
//!
//! 1. [`geometry::drop_devices`] places `K/2` devices near the base station
//!    and `K/2` near the cell edge and maps distances to noise-normalized
//!    large-scale gains.
//! 2. For NOMA, [`geometry::partition_and_pair`] forms (strongest, weakest)
//!    clusters.
//! 3. [`power::allocate`] splits the RF budget (EPA, PICPA, WF, Δ-WF).
//! 4. [`rates`] evaluates closed-form ergodic rates, [`energy`] the
//!    consumed power, [`metrics`] fairness.
//!
//! [`harness::run_sweep`] repeats this over the loading grid and reduces the
//! curves to areas and SE-EE trade-off points. [`oracle`] checks the
//! closed-form array gains against explicit ZF precoding.
//!
//! ```
//! use noma_mimo_sim::{geometry, power, rates, rng, SystemConfig};
//!
//! let cfg = SystemConfig::default().with_antennas(64).with_devices(32);
//! let mut rng = rng::substream(7, &[]);
//! let drop = geometry::drop_devices(&cfg, &mut rng).unwrap();
//! let alloc = power::allocate(&cfg, &drop, None, power::System::Mmimo, power::Policy::Wf).unwrap();
//! let r = rates::mimo_rates(&cfg, &drop, &alloc).unwrap();
//! assert!(r.sum_rate > 0.0);
//! ```

pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod power;
pub mod rates;
pub mod rng;

pub use config::{EnergyParams, PathlossMode, Preset, RunConfig, SystemConfig};
pub use error::{Error, Result};
pub use harness::{run_sweep, summarize, Combo, SweepResult, Summary};
pub use power::{Policy, System};
