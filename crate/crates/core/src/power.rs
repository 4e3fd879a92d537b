//! Power allocation policies for the ZF-mMIMO and ZF-NOMA downlinks.
//!
//! All policies spend exactly the configured RF budget. Equal-power and
//! channel-inversion keep every device active; the water-filling variants may
//! switch devices (mMIMO) or whole pairs (NOMA) off.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{SicMode, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::{Clustering, DeviceDrop};
use crate::rates::noma_array_gain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Mmimo,
    Noma,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            System::Mmimo => "mmimo",
            System::Noma => "noma",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmimo" => Ok(System::Mmimo),
            "noma" => Ok(System::Noma),
            other => Err(Error::Input(format!("unknown system `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Equal power.
    Epa,
    /// Proportional channel inversion.
    Picpa,
    /// Classical water-filling (mMIMO only).
    Wf,
    /// Water-filling over pair gain differences (NOMA only).
    Dwf,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Epa => "epa",
            Policy::Picpa => "picpa",
            Policy::Wf => "wf",
            Policy::Dwf => "dwf",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epa" => Ok(Policy::Epa),
            "picpa" => Ok(Policy::Picpa),
            "wf" => Ok(Policy::Wf),
            "dwf" | "delta-wf" => Ok(Policy::Dwf),
            other => Err(Error::Input(format!("unknown policy `{other}`"))),
        }
    }
}

/// Per-device powers for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub system: System,
    pub policy: Policy,
    /// Indexed by device; zero for dropped devices.
    pub power: Vec<f64>,
    pub active: Vec<bool>,
    /// Final water level (water-filling policies only).
    pub water_level: Option<f64>,
    /// Per-cluster power, in cluster order (NOMA only).
    pub cluster_power: Option<Vec<f64>>,
}

impl AllocationResult {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn active_fraction(&self) -> f64 {
        if self.active.is_empty() {
            return 0.0;
        }
        self.active_count() as f64 / self.active.len() as f64
    }
}

/// Outcome of iterative water-filling over a set of channel gains.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub power: Vec<f64>,
    pub active: Vec<bool>,
    pub level: f64,
    /// Passes of the drop-and-resolve loop.
    pub iterations: usize,
}

/// Iterative water-filling: solve for the level over the active set, switch
/// off every entry whose power is not strictly positive, repeat until nothing
/// is switched off.
///
/// The strongest gain always survives, so the loop terminates with a
/// non-empty active set in at most `gains.len()` passes.
pub fn water_fill(gains: &[f64], budget: f64) -> WaterFilling {
    let n = gains.len();
    let inv: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    let mut active = vec![true; n];
    let mut power = vec![0.0; n];
    let mut level = 0.0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let count = active.iter().filter(|a| **a).count();
        if count == 0 {
            break;
        }
        let floor: f64 = inv.iter().zip(&active).filter(|(_, a)| **a).map(|(v, _)| v).sum();
        level = (budget + floor) / count as f64;
        let mut dropped = false;
        for i in 0..n {
            if !active[i] {
                power[i] = 0.0;
                continue;
            }
            let p = level - inv[i];
            if p > 0.0 {
                power[i] = p;
            } else {
                power[i] = 0.0;
                active[i] = false;
                dropped = true;
            }
        }
        if !dropped {
            break;
        }
    }
    WaterFilling {
        power,
        active,
        level,
        iterations,
    }
}

fn check_gains(beta: &[f64]) -> Result<()> {
    match beta.iter().enumerate().find(|(_, b)| !(**b > 0.0 && b.is_finite())) {
        Some((device, &gain)) => Err(Error::NonPositiveGain { device, gain }),
        None => Ok(()),
    }
}

fn cluster_reference(config: &SystemConfig, clustering: &Clustering) -> f64 {
    config.p_rf / clustering.clusters() as f64
}

fn spread_clusters(
    clustering: &Clustering,
    policy: Policy,
    shares: impl Iterator<Item = (f64, f64)>,
    cluster_power: Vec<f64>,
    water_level: Option<f64>,
) -> AllocationResult {
    let k = clustering.devices;
    let mut power = vec![0.0; k];
    let mut active = vec![true; k];
    for ((c, e), (pc, pe)) in clustering.pairs().zip(shares) {
        power[c] = pc;
        power[e] = pe;
    }
    if policy == Policy::Dwf {
        for ((c, e), p) in clustering.pairs().zip(&cluster_power) {
            let on = *p > 0.0;
            active[c] = on;
            active[e] = on;
        }
    }
    AllocationResult {
        system: System::Noma,
        policy,
        power,
        active,
        water_level,
        cluster_power: Some(cluster_power),
    }
}

/// `p_k = P_rf / K`.
pub fn epa_mimo(config: &SystemConfig) -> AllocationResult {
    let k = config.devices;
    AllocationResult {
        system: System::Mmimo,
        policy: Policy::Epa,
        power: vec![config.p_rf / k as f64; k],
        active: vec![true; k],
        water_level: None,
        cluster_power: None,
    }
}

/// Each cluster gets `2 P_rf / K`, split evenly between its two members.
pub fn epa_noma(config: &SystemConfig, clustering: &Clustering) -> Result<AllocationResult> {
    if clustering.devices % 2 != 0 {
        return Err(Error::OddDevices(clustering.devices));
    }
    let p_ref = cluster_reference(config, clustering);
    let n = clustering.clusters();
    Ok(spread_clusters(
        clustering,
        Policy::Epa,
        std::iter::repeat((p_ref / 2.0, p_ref / 2.0)).take(n),
        vec![p_ref; n],
        None,
    ))
}

/// `p_k = P_rf * (1/beta_k) / sum_j (1/beta_j)`.
pub fn picpa_mimo(config: &SystemConfig, drop: &DeviceDrop) -> Result<AllocationResult> {
    check_gains(&drop.beta)?;
    let inv: Vec<f64> = drop.beta.iter().map(|b| 1.0 / b).collect();
    let total: f64 = inv.iter().sum();
    let power = inv.iter().map(|w| config.p_rf * w / total).collect();
    Ok(AllocationResult {
        system: System::Mmimo,
        policy: Policy::Picpa,
        power,
        active: vec![true; drop.len()],
        water_level: None,
        cluster_power: None,
    })
}

/// Intra-cluster channel-inversion split of `p_ref`.
///
/// Returns `(center, edge)`. The raw center share
/// `p_ref * beta_e / (beta_c - beta_e)` exceeds `p_ref` when
/// `beta_c < 2 beta_e`; those clusters fall back to an even split.
pub fn picpa_split(p_ref: f64, beta_center: f64, beta_edge: f64) -> (f64, f64) {
    let raw = p_ref * beta_edge / (beta_center - beta_edge);
    let center = if raw > p_ref { p_ref / 2.0 } else { raw };
    (center, p_ref - center)
}

pub fn picpa_noma(config: &SystemConfig, clustering: &Clustering) -> Result<AllocationResult> {
    if let Some((cluster, _)) = clustering
        .delta_beta
        .iter()
        .enumerate()
        .find(|(_, d)| !(**d > 0.0))
    {
        return Err(Error::DegenerateCluster {
            cluster,
            gain: clustering.center_beta[cluster],
        });
    }
    let p_ref = cluster_reference(config, clustering);
    let shares: Vec<(f64, f64)> = clustering
        .center_beta
        .iter()
        .zip(&clustering.edge_beta)
        .map(|(&c, &e)| picpa_split(p_ref, c, e))
        .collect();
    Ok(spread_clusters(
        clustering,
        Policy::Picpa,
        shares.into_iter(),
        vec![p_ref; clustering.clusters()],
        None,
    ))
}

/// Classical water-filling over device gains.
pub fn wf_mimo(config: &SystemConfig, drop: &DeviceDrop) -> Result<AllocationResult> {
    check_gains(&drop.beta)?;
    let wf = water_fill(&drop.beta, config.p_rf);
    Ok(AllocationResult {
        system: System::Mmimo,
        policy: Policy::Wf,
        power: wf.power,
        active: wf.active,
        water_level: Some(wf.level),
        cluster_power: None,
    })
}

/// Water-filling over clusters with `delta_beta` as the effective gain; a
/// cluster is kept or dropped as a whole and its power is split evenly.
pub fn dwf_noma(config: &SystemConfig, clustering: &Clustering) -> Result<AllocationResult> {
    if let Some((cluster, _)) = clustering
        .delta_beta
        .iter()
        .enumerate()
        .find(|(_, d)| !(**d > 0.0))
    {
        return Err(Error::DegenerateCluster {
            cluster,
            gain: clustering.center_beta[cluster],
        });
    }
    let wf = water_fill(&clustering.delta_beta, config.p_rf);
    let shares: Vec<(f64, f64)> = wf.power.iter().map(|p| (p / 2.0, p / 2.0)).collect();
    Ok(spread_clusters(
        clustering,
        Policy::Dwf,
        shares.into_iter(),
        wf.power,
        Some(wf.level),
    ))
}

/// Runs `policy` for `system`, pairing devices first when needed.
pub fn allocate(
    config: &SystemConfig,
    drop: &DeviceDrop,
    clustering: Option<&Clustering>,
    system: System,
    policy: Policy,
) -> Result<AllocationResult> {
    let owned;
    let clustering = match (system, clustering) {
        (System::Noma, Some(c)) => Some(c),
        (System::Noma, None) => {
            owned = crate::geometry::partition_and_pair(drop)?;
            Some(&owned)
        }
        (System::Mmimo, _) => None,
    };
    match (system, policy) {
        (System::Mmimo, Policy::Epa) => Ok(epa_mimo(config)),
        (System::Mmimo, Policy::Picpa) => picpa_mimo(config, drop),
        (System::Mmimo, Policy::Wf) => wf_mimo(config, drop),
        (System::Noma, Policy::Epa) => epa_noma(config, clustering.unwrap()),
        (System::Noma, Policy::Picpa) => picpa_noma(config, clustering.unwrap()),
        (System::Noma, Policy::Dwf) => dwf_noma(config, clustering.unwrap()),
        (system, policy) => Err(Error::IncompatibleCombo {
            system: system.as_str(),
            policy: policy.as_str(),
        }),
    }
}

/// SIC decodability check for one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicCheck {
    /// SINR of the edge message at the center device.
    pub center_decodes_edge: f64,
    /// The SINR it is compared against (depends on the mode).
    pub reference: f64,
    pub margin: f64,
    pub feasible: bool,
}

/// Per-cluster SIC margins from the closed-form SINRs.
///
/// Diagnostic only: powers are never modified.
pub fn sic_feasibility(
    clustering: &Clustering,
    allocation: &AllocationResult,
    config: &SystemConfig,
    mode: SicMode,
) -> Result<Vec<SicCheck>> {
    if allocation.system != System::Noma {
        return Err(Error::WrongSystem {
            expected: "noma",
            found: allocation.system.as_str(),
        });
    }
    let gain = noma_array_gain(config.antennas, clustering.devices);
    let checks = clustering
        .pairs()
        .zip(clustering.center_beta.iter().zip(&clustering.edge_beta))
        .map(|((c, e), (&bc, &be))| {
            let (pc, pe) = (allocation.power[c], allocation.power[e]);
            let center_decodes_edge = gain * bc * pe / (gain * bc * pc + 1.0);
            let reference = match mode {
                SicMode::EdgeReference => be * pe / (be * pc + 1.0),
                SicMode::PaperEq11 => gain * bc * pc,
            };
            let margin = center_decodes_edge - reference;
            SicCheck {
                center_decodes_edge,
                reference,
                margin,
                feasible: margin >= 0.0,
            }
        })
        .collect();
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pair_gains;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(k: usize) -> SystemConfig {
        SystemConfig::default().with_devices(k)
    }

    fn noma_alloc(powers: &[(f64, f64)], clustering: &Clustering) -> AllocationResult {
        let mut power = vec![0.0; clustering.devices];
        for ((c, e), (pc, pe)) in clustering.pairs().zip(powers) {
            power[c] = *pc;
            power[e] = *pe;
        }
        AllocationResult {
            system: System::Noma,
            policy: Policy::Epa,
            active: vec![true; power.len()],
            power,
            water_level: None,
            cluster_power: None,
        }
    }

    #[test]
    fn epa_examples() {
        assert_eq!(epa_mimo(&cfg(4)).power, vec![0.25; 4]);
        assert_eq!(epa_mimo(&cfg(1)).power, vec![1.0]);
        let a = epa_mimo(&cfg(128));
        assert!(a.power.iter().all(|p| *p == 7.8125e-3));
        assert_eq!(a.total_power(), 1.0);
    }

    #[test]
    fn epa_noma_examples() {
        let c = pair_gains(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        let a = epa_noma(&cfg(4), &c).unwrap();
        assert_eq!(a.cluster_power, Some(vec![0.5, 0.5]));
        assert_eq!(a.power, vec![0.25; 4]);

        let c = pair_gains(&[3.0, 1.0]).unwrap();
        let a = epa_noma(&cfg(2), &c).unwrap();
        assert_eq!(a.cluster_power, Some(vec![1.0]));
        assert_eq!(a.power, vec![0.5, 0.5]);
    }

    #[test]
    fn picpa_mimo_examples() {
        let p = |b: Vec<f64>| picpa_mimo(&cfg(b.len()), &DeviceDrop::from_gains(b)).unwrap().power;
        assert_eq!(p(vec![1.0, 1.0]), vec![0.5, 0.5]);
        let two = p(vec![2.0, 1.0]);
        assert_relative_eq!(two[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(two[1], 2.0 / 3.0, max_relative = 1e-15);
        let three = p(vec![4.0, 2.0, 1.0]);
        for (got, want) in three.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-15);
        }
    }

    #[test]
    fn picpa_rejects_nonpositive_gain() {
        let err = picpa_mimo(&cfg(2), &DeviceDrop::from_gains(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NonPositiveGain { device: 1, .. }));
    }

    #[test]
    fn picpa_split_examples() {
        assert_eq!(picpa_split(1.0, 5.0, 1.0), (0.25, 0.75));
        assert_eq!(picpa_split(1.0, 3.0, 1.0), (0.5, 0.5));
        // raw center share 2 > 1: even split
        assert_eq!(picpa_split(1.0, 1.5, 1.0), (0.5, 0.5));
    }

    #[test]
    fn picpa_noma_degenerate() {
        let c = pair_gains(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            picpa_noma(&cfg(2), &c),
            Err(Error::DegenerateCluster { cluster: 0, .. })
        ));
    }

    #[test]
    fn wf_examples() {
        let a = wf_mimo(&cfg(2), &DeviceDrop::from_gains(vec![1.0, 1.0])).unwrap();
        assert_eq!(a.power, vec![0.5, 0.5]);
        assert_eq!(a.water_level, Some(1.5));

        // first pass: mu = 2.25, p = [1.25, -0.25] -> second device dropped
        let wf = water_fill(&[1.0, 0.4], 1.0);
        assert_eq!(wf.iterations, 2);
        assert_eq!(wf.power, vec![1.0, 0.0]);
        assert_eq!(wf.active, vec![true, false]);
        assert_eq!(wf.level, 2.0);
    }

    #[test]
    fn dwf_examples() {
        // delta = [1, 1]
        let c = pair_gains(&[2.0, 2.0, 1.0, 1.0]).unwrap();
        let a = dwf_noma(&cfg(4), &c).unwrap();
        assert_eq!(a.cluster_power, Some(vec![0.5, 0.5]));
        assert_eq!(a.power, vec![0.25; 4]);

        // delta = [1, 0.1]: first pass mu = 6, p = [5, -4] -> cluster 2 dropped
        let c = pair_gains(&[1.5, 0.6, 0.5, 0.5]).unwrap();
        assert_relative_eq!(c.delta_beta[0], 1.0);
        assert_relative_eq!(c.delta_beta[1], 0.1, max_relative = 1e-12);
        let a = dwf_noma(&cfg(4), &c).unwrap();
        let cp = a.cluster_power.clone().unwrap();
        assert_relative_eq!(cp[0], 1.0);
        assert_eq!(cp[1], 0.0);
        let (c0, e0) = (c.center_ids[0], c.edge_ids[0]);
        assert_relative_eq!(a.power[c0], 0.5);
        assert_relative_eq!(a.power[e0], 0.5);
        assert_eq!(a.active_count(), 2);
        assert_eq!(a.active[c.center_ids[1]], a.active[c.edge_ids[1]]);
    }

    #[test]
    fn incompatible_combos() {
        let drop = DeviceDrop::from_gains(vec![2.0, 1.0]);
        assert!(matches!(
            allocate(&cfg(2), &drop, None, System::Noma, Policy::Wf),
            Err(Error::IncompatibleCombo { .. })
        ));
        assert!(matches!(
            allocate(&cfg(2), &drop, None, System::Mmimo, Policy::Dwf),
            Err(Error::IncompatibleCombo { .. })
        ));
    }

    #[test]
    fn sic_examples() {
        // M = 64, K = 64 gives M_bar = 33; use a drop with 64 devices whose
        // first cluster carries the gains under test.
        let mut beta = vec![0.5; 64];
        for (i, b) in beta.iter_mut().enumerate() {
            *b = 1.0 - i as f64 * 1e-3;
        }
        beta[0] = 1.0;
        beta[63] = 0.1;
        let c = pair_gains(&beta).unwrap();
        assert_eq!(c.center_beta[0], 1.0);
        assert_eq!(c.edge_beta[0], 0.1);
        let config = SystemConfig::default().with_antennas(64).with_devices(64);
        let mut shares = vec![(0.01, 0.01); 32];
        shares[0] = (0.5, 0.5);
        let alloc = noma_alloc(&shares, &c);

        let edge = sic_feasibility(&c, &alloc, &config, SicMode::EdgeReference).unwrap();
        assert_relative_eq!(edge[0].center_decodes_edge, 16.5 / 17.5, max_relative = 1e-12);
        assert_relative_eq!(edge[0].reference, 0.05 / 1.05, max_relative = 1e-12);
        assert_relative_eq!(edge[0].margin, 16.5 / 17.5 - 0.05 / 1.05, max_relative = 1e-12);
        assert!((edge[0].margin - 0.895).abs() < 1e-3);
        assert!(edge[0].feasible);

        let paper = sic_feasibility(&c, &alloc, &config, SicMode::PaperEq11).unwrap();
        assert_relative_eq!(paper[0].reference, 16.5, max_relative = 1e-12);
        assert!((paper[0].margin + 15.557).abs() < 1e-3);
        assert!(!paper[0].feasible);

        // zero-power edge
        shares[0] = (0.5, 0.0);
        let alloc = noma_alloc(&shares, &c);
        let z = sic_feasibility(&c, &alloc, &config, SicMode::EdgeReference).unwrap();
        assert_eq!((z[0].center_decodes_edge, z[0].reference, z[0].margin), (0.0, 0.0, 0.0));
        assert!(z[0].feasible);
    }

    #[test]
    fn sic_requires_noma() {
        let c = pair_gains(&[2.0, 1.0]).unwrap();
        let a = epa_mimo(&cfg(2));
        assert!(sic_feasibility(&c, &a, &cfg(2), SicMode::EdgeReference).is_err());
    }

    fn gains(max: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 1..=max).prop_map(|v| v.into_iter().map(|e| 10f64.powf(e)).collect())
    }

    proptest! {
        #[test]
        fn epa_noma_matches_epa_mimo(half in 1usize..64, p in 0.1f64..10.0) {
            let k = 2 * half;
            let config = SystemConfig { p_rf: p, ..cfg(k) };
            let beta: Vec<f64> = (0..k).map(|i| 1.0 + (k - i) as f64).collect();
            let c = pair_gains(&beta).unwrap();
            prop_assert_eq!(epa_noma(&config, &c).unwrap().power, epa_mimo(&config).power);
        }

        #[test]
        fn picpa_favours_weak(beta in gains(16)) {
            let a = picpa_mimo(&cfg(beta.len()), &DeviceDrop::from_gains(beta.clone())).unwrap();
            for i in 0..beta.len() {
                for j in 0..beta.len() {
                    if beta[i] < beta[j] {
                        prop_assert!(a.power[i] > a.power[j]);
                    }
                }
            }
        }

        #[test]
        fn wf_scale_identity(beta in gains(16), c in 0.01f64..100.0) {
            let base = water_fill(&beta, 1.0);
            let scaled: Vec<f64> = beta.iter().map(|b| b * c).collect();
            let s = water_fill(&scaled, 1.0 / c);
            prop_assert_eq!(&base.active, &s.active);
            prop_assert!((s.level - base.level / c).abs() <= 1e-9 * base.level / c);
        }

        #[test]
        fn dwf_keeps_pairs_whole(half in 1usize..12, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::rng::substream(seed, &[]);
            let beta: Vec<f64> = (0..2 * half).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
            let c = pair_gains(&beta).unwrap();
            prop_assume!(c.delta_beta.iter().all(|d| *d > 0.0));
            let a = dwf_noma(&cfg(2 * half), &c).unwrap();
            for (ci, ei) in c.pairs() {
                prop_assert_eq!(a.active[ci], a.active[ei]);
                prop_assert_eq!(a.power[ci], a.power[ei]);
            }
            prop_assert!((a.total_power() - 1.0).abs() < 1e-9);
        }
    }
}
