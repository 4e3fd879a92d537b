//! Total power consumption and energy efficiency.

use serde::{Deserialize, Serialize};

use crate::config::{EnergyParams, SystemConfig};
use crate::error::{Error, Result};

/// The five terms of the consumption model, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    /// `P_rf / amp_efficiency`.
    pub amplifier: f64,
    /// `P0 + Psyn`.
    pub fixed: f64,
    /// `K (Pcod + Pdec + Prx) + 2 K^3 / (3 L T)`.
    pub per_device: f64,
    /// `M Ptx`.
    pub per_antenna: f64,
    /// `M K (3 + T) / (T L) + 2 M K^2 / (T L)`.
    pub precoding: f64,
}

impl PowerBreakdown {
    pub fn total(&self) -> f64 {
        self.amplifier + self.fixed + self.per_device + self.per_antenna + self.precoding
    }
}

/// Power consumption for the configured `M`, `K` and RF budget.
///
/// `T` in the computational terms is the coherence interval in symbols, so
/// the cost is per coherence block.
pub fn total_power(config: &SystemConfig, energy: &EnergyParams) -> Result<PowerBreakdown> {
    energy.validate()?;
    if config.antennas == 0 || config.devices == 0 {
        return Err(Error::Config("total power needs M >= 1 and K >= 1".into()));
    }
    if !(config.p_rf > 0.0) || config.coherence_symbols == 0 {
        return Err(Error::Config("RF budget and coherence interval must be positive".into()));
    }
    let m = config.antennas as f64;
    let k = config.devices as f64;
    let t = config.coherence_symbols as f64;
    let l = energy.ops_per_joule;
    Ok(PowerBreakdown {
        amplifier: config.p_rf / energy.amp_efficiency,
        fixed: energy.p0 + energy.p_syn,
        per_device: k * (energy.p_cod + energy.p_dec + energy.p_rx) + k.powi(3) * 2.0 / (3.0 * l * t),
        per_antenna: m * energy.p_tx,
        precoding: m * k * (3.0 + t) / (t * l) + m * k * k * 2.0 / (t * l),
    })
}

/// bits/Joule/Hz.
pub fn energy_efficiency(sum_rate: f64, p_tot: f64) -> Result<f64> {
    if !(p_tot > 0.0) {
        return Err(Error::Input(format!("total power must be positive, got {p_tot}")));
    }
    Ok(sum_rate / p_tot)
}
