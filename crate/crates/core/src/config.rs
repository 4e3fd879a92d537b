//! Scenario, energy and sweep configuration.
//!
//! Every field has a default taken from the reference deployment (annular
//! cell, 1 W RF budget, 512-symbol coherence interval), so a config file only
//! needs to list what it overrides. Files are TOML with three sections:
//!
//! ```toml
//! [scenario]
//! antennas = 128
//! pathloss_mode = "normalized-reference"
//!
//! [energy]
//! amp_efficiency = 0.3
//!
//! [sweep]
//! trials = 1000
//! seed = 42
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Combo;

/// Devices per NOMA cluster. Fixed.
pub const CLUSTER_SIZE: usize = 2;

/// Reference distance of the default calibration, in meters.
///
/// Least-squares fit (log domain) of the WF-mMIMO sum rate against the three
/// trade-off sum rates reported for M = 64, 128, 256. See the `calibrate`
/// example for the procedure.
pub const CALIBRATED_D_REF: f64 = 277.0;

/// How distance is turned into a noise-normalized large-scale gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathlossMode {
    /// `beta = 10^(-(beta0_db + 10 xi log10 d)/10) / 10^(noise_norm_db/10)`.
    PaperDb,
    /// `beta = (d / d_ref)^(-xi)`.
    NormalizedReference,
}

impl fmt::Display for PathlossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PathlossMode::PaperDb => "paper-db",
            PathlossMode::NormalizedReference => "normalized-reference",
        })
    }
}

impl FromStr for PathlossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-db" => Ok(PathlossMode::PaperDb),
            "normalized-reference" => Ok(PathlossMode::NormalizedReference),
            other => Err(Error::Config(format!("unknown pathloss mode `{other}`"))),
        }
    }
}

/// Cell geometry, channel, timing and RF budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas `M`.
    pub antennas: usize,
    /// Devices `K`. Overwritten per grid point during a sweep.
    pub devices: usize,
    /// Inner radius of the center annulus [m].
    pub d_min: f64,
    /// Outer radius of the center annulus [m].
    pub d1: f64,
    /// Inner radius of the edge annulus [m].
    pub d2: f64,
    /// Cell radius [m].
    pub d_max: f64,
    /// Pathloss exponent.
    pub pathloss_exponent: f64,
    /// Attenuation at 1 m [dB], paper-db mode.
    pub beta0_db: f64,
    pub pathloss_mode: PathlossMode,
    /// Noise normalization [dB], paper-db mode.
    pub noise_norm_db: f64,
    /// Distance with unit gain [m], normalized-reference mode.
    pub d_ref: f64,
    /// Coherence interval length in symbol periods.
    pub coherence_symbols: usize,
    /// Total RF power budget [W].
    pub p_rf: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let xi = 3.78;
        let beta0_db = 130.0;
        SystemConfig {
            antennas: 64,
            devices: 32,
            d_min: 50.0,
            d1: 100.0,
            d2: 150.0,
            d_max: 350.0,
            pathloss_exponent: xi,
            beta0_db,
            pathloss_mode: PathlossMode::NormalizedReference,
            // Makes paper-db coincide with the calibrated normalized-reference gains.
            noise_norm_db: -(beta0_db + 10.0 * xi * CALIBRATED_D_REF.log10()),
            d_ref: CALIBRATED_D_REF,
            coherence_symbols: 512,
            p_rf: 1.0,
        }
    }
}

impl SystemConfig {
    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }

    pub fn with_devices(mut self, devices: usize) -> Self {
        self.devices = devices;
        self
    }

    /// Loading `K / M`.
    pub fn loading(&self) -> f64 {
        self.devices as f64 / self.antennas as f64
    }

    /// Checks geometry, timing and budget. Does not require `K` to be even;
    /// the NOMA paths check that themselves.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.antennas == 0 {
            return bad("antennas must be positive");
        }
        if self.devices == 0 {
            return bad("devices must be positive");
        }
        let radii = [self.d_min, self.d1, self.d2, self.d_max];
        if radii.iter().any(|r| !r.is_finite()) || self.d_min <= 0.0 {
            return bad("annulus radii must be finite and d_min > 0");
        }
        if !(self.d_min < self.d1 && self.d1 < self.d2 && self.d2 < self.d_max) {
            return bad("annulus radii must satisfy d_min < d1 < d2 < d_max");
        }
        if !(self.pathloss_exponent > 0.0) || !self.pathloss_exponent.is_finite() {
            return bad("pathloss exponent must be positive");
        }
        if self.pathloss_mode == PathlossMode::NormalizedReference
            && !(self.d_ref > 0.0 && self.d_ref.is_finite())
        {
            return bad("d_ref must be positive");
        }
        if !self.beta0_db.is_finite() || !self.noise_norm_db.is_finite() {
            return bad("dB parameters must be finite");
        }
        if self.coherence_symbols == 0 {
            return bad("coherence interval must be at least one symbol");
        }
        if !(self.p_rf > 0.0 && self.p_rf.is_finite()) {
            return bad("RF budget must be positive");
        }
        Ok(())
    }
}

/// Circuit power model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    /// Backhaul, control signaling and baseband [W].
    pub p0: f64,
    /// Oscillator [W].
    pub p_syn: f64,
    /// Coding and modulation [W per device].
    pub p_cod: f64,
    /// Decoding and demodulation [W per device].
    pub p_dec: f64,
    /// Receive chain [W per device].
    pub p_rx: f64,
    /// Transmit chain [W per antenna].
    pub p_tx: f64,
    /// Power amplifier efficiency in (0, 1].
    pub amp_efficiency: f64,
    /// Computational efficiency [operations per joule].
    pub ops_per_joule: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            p0: 2.0,
            p_syn: 2.0,
            p_cod: 4.0,
            p_dec: 0.5,
            p_rx: 0.3,
            p_tx: 1.0,
            amp_efficiency: 0.3,
            ops_per_joule: 1e9,
        }
    }
}

impl EnergyParams {
    /// Power terms may be zero (useful for isolating one term); the amplifier
    /// efficiency and computational efficiency must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        let terms = [
            ("p0", self.p0),
            ("p_syn", self.p_syn),
            ("p_cod", self.p_cod),
            ("p_dec", self.p_dec),
            ("p_rx", self.p_rx),
            ("p_tx", self.p_tx),
        ];
        for (name, v) in terms {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "amplifier efficiency must lie in (0, 1], got {}",
                self.amp_efficiency
            )));
        }
        if !(self.ops_per_joule > 0.0) {
            return Err(Error::Config("ops_per_joule must be positive".into()));
        }
        Ok(())
    }
}

/// Which SINR the center device's decode-the-edge SINR is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SicMode {
    /// Against the edge device's own SINR (standard decodability condition).
    EdgeReference,
    /// Against the center device's own SINR, as the condition is printed.
    PaperEq11,
}

impl fmt::Display for SicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SicMode::EdgeReference => "edge-reference",
            SicMode::PaperEq11 => "paper-eq11",
        })
    }
}

/// Population used in the Jain index denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FairnessPopulation {
    /// All `K` devices, dropped ones counted with zero rate.
    Devices,
    /// Divide by the antenna count `M` (can exceed 1 when K < M).
    Antennas,
}

impl fmt::Display for FairnessPopulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            FairnessPopulation::Devices => "devices",
            FairnessPopulation::Antennas => "antennas",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub trials: usize,
    pub seed: u64,
    pub combos: Vec<Combo>,
    pub sic_mode: SicMode,
    pub fairness_population: FairnessPopulation,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            trials: 1000,
            seed: 42,
            combos: Combo::all().to_vec(),
            sic_mode: SicMode::EdgeReference,
            fairness_population: FairnessPopulation::Devices,
        }
    }
}

/// Everything a sweep needs; the unit of (de)serialization for config files
/// and run manifests.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: SystemConfig,
    pub energy: EnergyParams,
    pub sweep: SweepSettings,
}

/// Built-in presets, one per antenna count of the reference study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperM64,
    PaperM128,
    PaperM256,
}

impl Preset {
    pub fn antennas(self) -> usize {
        match self {
            Preset::PaperM64 => 64,
            Preset::PaperM128 => 128,
            Preset::PaperM256 => 256,
        }
    }

    pub fn config(self) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.scenario.antennas = self.antennas();
        cfg
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-m64" => Ok(Preset::PaperM64),
            "paper-m128" => Ok(Preset::PaperM128),
            "paper-m256" => Ok(Preset::PaperM256),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }

    /// Loads a TOML config, or the resolved config embedded in a
    /// `manifest.json` from an earlier run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::harness::RunManifest =
                serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
            manifest.resolved_config.validate()?;
            return Ok(manifest.resolved_config);
        }
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::parse(path, msg),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.energy.validate()?;
        if self.sweep.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.combos.is_empty() {
            return Err(Error::Config("at least one (system, policy) combination is required".into()));
        }
        for combo in &self.sweep.combos {
            combo.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        for p in [Preset::PaperM64, Preset::PaperM128, Preset::PaperM256] {
            p.config().validate().unwrap();
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections_override() {
        let cfg = RunConfig::from_toml_str(
            "[scenario]\nantennas = 128\npathloss_mode = \"paper-db\"\n[sweep]\ntrials = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.antennas, 128);
        assert_eq!(cfg.scenario.pathloss_mode, PathlossMode::PaperDb);
        assert_eq!(cfg.sweep.trials, 7);
        assert_eq!(cfg.energy, EnergyParams::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("[scenario]\nantenas = 3\n").is_err());
    }

    #[test]
    fn bad_geometry_rejected() {
        let cfg = SystemConfig {
            d1: 200.0,
            ..SystemConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = Preset::PaperM256.config();
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn amplifier_efficiency_bounds() {
        let e = EnergyParams {
            amp_efficiency: 1.2,
            ..EnergyParams::default()
        };
        assert!(e.validate().is_err());
    }
}
