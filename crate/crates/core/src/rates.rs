//! Closed-form ergodic rates under ZF precoding.
//!
//! Small-scale fading is already averaged out by the array gains (`M - K` for
//! mMIMO, `M + 1 - K/2` for the NOMA center device), so these are
//! deterministic functions of the large-scale gains and powers.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{Clustering, DeviceDrop};
use crate::power::{AllocationResult, System};

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// bits/s/Hz, indexed by device.
    pub per_device_rate: Vec<f64>,
    /// Center + edge rate per cluster (NOMA only).
    pub cluster_rate: Option<Vec<f64>>,
    pub sum_rate: f64,
    pub tau: f64,
}

/// `log2(1 + x)`, accurate for tiny `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Share of the coherence interval left for data after `K` pilot symbols.
///
/// Clamped to zero when the pilots fill the whole interval.
pub fn data_fraction(config: &SystemConfig) -> f64 {
    let k = config.devices as f64;
    let iota = config.coherence_symbols as f64;
    if config.devices > config.coherence_symbols {
        log::warn!(
            "K = {} exceeds the coherence interval of {} symbols; no data time left",
            config.devices,
            config.coherence_symbols
        );
    }
    (1.0 - k / iota).max(0.0)
}

/// ZF-mMIMO array gain `M - K`, or 0 when `K >= M`.
pub fn mimo_array_gain(antennas: usize, devices: usize) -> f64 {
    antennas.saturating_sub(devices) as f64
}

/// ZF-NOMA center-device array gain `M + 1 - K/2`.
pub fn noma_array_gain(antennas: usize, devices: usize) -> f64 {
    antennas as f64 + 1.0 - (devices / 2) as f64
}

/// Whether the NOMA closed form is defined (`K < 2M - 1`).
pub fn noma_in_range(antennas: usize, devices: usize) -> bool {
    devices + 1 < 2 * antennas
}

/// `R_k = tau log2(1 + (M - K) p_k beta_k)`; all zero once `K >= M`.
pub fn mimo_rates(
    config: &SystemConfig,
    drop: &DeviceDrop,
    allocation: &AllocationResult,
) -> Result<RateReport> {
    if allocation.system != System::Mmimo {
        return Err(Error::WrongSystem {
            expected: "mmimo",
            found: allocation.system.as_str(),
        });
    }
    let tau = data_fraction(config);
    let gain = mimo_array_gain(config.antennas, config.devices);
    let per_device_rate: Vec<f64> = drop
        .beta
        .iter()
        .zip(&allocation.power)
        .map(|(b, p)| tau * log2_1p(gain * p * b))
        .collect();
    Ok(RateReport {
        sum_rate: per_device_rate.iter().sum(),
        per_device_rate,
        cluster_rate: None,
        tau,
    })
}

/// Center device (after SIC): `tau log2(1 + M_bar beta_c p_c)`.
/// Edge device (treats the center signal as noise):
/// `tau log2(1 + beta_e p_e / (beta_e p_c + 1))`.
pub fn noma_rates(
    config: &SystemConfig,
    clustering: &Clustering,
    allocation: &AllocationResult,
) -> Result<RateReport> {
    if allocation.system != System::Noma {
        return Err(Error::WrongSystem {
            expected: "noma",
            found: allocation.system.as_str(),
        });
    }
    let k = clustering.devices;
    if !noma_in_range(config.antennas, k) {
        return Err(Error::NomaOperatingRange {
            devices: k,
            antennas: config.antennas,
        });
    }
    let tau = data_fraction(config);
    let gain = noma_array_gain(config.antennas, k);
    let mut per_device_rate = vec![0.0; k];
    let mut cluster_rate = Vec::with_capacity(clustering.clusters());
    for ((c, e), (&bc, &be)) in clustering
        .pairs()
        .zip(clustering.center_beta.iter().zip(&clustering.edge_beta))
    {
        let (pc, pe) = (allocation.power[c], allocation.power[e]);
        let rc = tau * log2_1p(gain * bc * pc);
        let re = tau * log2_1p(be * pe / (be * pc + 1.0));
        per_device_rate[c] = rc;
        per_device_rate[e] = re;
        cluster_rate.push(rc + re);
    }
    Ok(RateReport {
        sum_rate: per_device_rate.iter().sum(),
        per_device_rate,
        cluster_rate: Some(cluster_rate),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pair_gains;
    use crate::power::{epa_mimo, Policy};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn config(m: usize, k: usize) -> SystemConfig {
        SystemConfig::default().with_antennas(m).with_devices(k)
    }

    fn noma_alloc(c: &Clustering, shares: &[(f64, f64)]) -> AllocationResult {
        let mut power = vec![0.0; c.devices];
        for ((ci, ei), (pc, pe)) in c.pairs().zip(shares) {
            power[ci] = *pc;
            power[ei] = *pe;
        }
        AllocationResult {
            system: System::Noma,
            policy: Policy::Epa,
            active: vec![true; c.devices],
            power,
            water_level: None,
            cluster_power: None,
        }
    }

    #[test]
    fn data_fraction_examples() {
        let mut c = config(64, 0);
        c.devices = 0;
        assert_eq!(data_fraction(&c), 1.0);
        assert_eq!(data_fraction(&config(64, 32)), 0.9375);
        assert_eq!(data_fraction(&config(1024, 512)), 0.0);
        assert_eq!(data_fraction(&config(1024, 600)), 0.0);
    }

    #[test]
    fn tau_step_is_two_over_iota() {
        let a = data_fraction(&config(64, 10));
        let b = data_fraction(&config(64, 12));
        assert_relative_eq!(a - b, 2.0 / 512.0, max_relative = 1e-12);
    }

    #[test]
    fn mimo_examples() {
        let c = config(64, 32);
        // (M - K) p beta = 32 * (1/32) * 1 = 1
        let drop = DeviceDrop::from_gains(vec![1.0; 32]);
        let r = mimo_rates(&c, &drop, &epa_mimo(&c)).unwrap();
        assert_relative_eq!(r.per_device_rate[0], 0.9375, max_relative = 1e-15);
        assert_relative_eq!(r.sum_rate, 30.0, max_relative = 1e-12);

        let mut a = epa_mimo(&c);
        a.power[3] = 0.0;
        assert_eq!(mimo_rates(&c, &drop, &a).unwrap().per_device_rate[3], 0.0);

        let full = config(64, 64);
        let drop = DeviceDrop::from_gains(vec![1.0; 64]);
        let r = mimo_rates(&full, &drop, &epa_mimo(&full)).unwrap();
        assert!(r.per_device_rate.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn noma_array_gain_example() {
        assert_eq!(noma_array_gain(64, 64), 33.0);
        assert!(noma_in_range(64, 126));
        assert!(!noma_in_range(64, 128));
    }

    #[test]
    fn noma_hand_evaluation() {
        let mut beta = vec![0.5; 64];
        beta[0] = 1.0;
        beta[63] = 0.01;
        let c = pair_gains(&beta).unwrap();
        let mut shares = vec![(0.0, 0.0); 32];
        shares[0] = (0.01, 0.01);
        let r = noma_rates(&config(64, 64), &c, &noma_alloc(&c, &shares)).unwrap();
        assert_eq!(r.tau, 0.875);
        let rc = r.per_device_rate[0];
        let re = r.per_device_rate[63];
        assert_relative_eq!(rc, 0.875 * 1.33f64.log2(), max_relative = 1e-12);
        // 0.875 * 0.41142 = 0.36000
        assert!((rc - 0.3600).abs() < 1e-4);
        assert_relative_eq!(re, 0.875 * (1.0f64 + 1e-4 / (1e-4 + 1.0)).log2(), max_relative = 1e-9);
        assert!((re - 1.26e-4).abs() < 1e-6);
        let cl = r.cluster_rate.as_ref().unwrap()[0];
        assert!((cl - 0.3601).abs() < 1e-4);
        assert_relative_eq!(r.sum_rate, cl, max_relative = 1e-12);
    }

    #[test]
    fn noma_zero_edge_power() {
        let c = pair_gains(&[2.0, 0.1]).unwrap();
        let cfg = config(8, 2);
        let r = noma_rates(&cfg, &c, &noma_alloc(&c, &[(0.7, 0.0)])).unwrap();
        let tau = data_fraction(&cfg);
        assert_relative_eq!(r.sum_rate, tau * (1.0 + 8.0 * 2.0 * 0.7f64).log2(), max_relative = 1e-12);
    }

    #[test]
    fn noma_out_of_range() {
        let beta: Vec<f64> = (0..128).map(|i| 1.0 + i as f64).collect();
        let c = pair_gains(&beta).unwrap();
        let shares = vec![(0.01, 0.01); 64];
        assert!(matches!(
            noma_rates(&config(64, 128), &c, &noma_alloc(&c, &shares)),
            Err(Error::NomaOperatingRange { .. })
        ));
    }

    #[test]
    fn noma_degenerate_equivalence() {
        // p_e = 0: NOMA sum rate equals a K/2-user mMIMO sum over the centers
        // with M_bar substituted for the array gain.
        let beta = [3.0, 2.5, 2.0, 0.3, 0.2, 0.1];
        let c = pair_gains(&beta).unwrap();
        let cfg = config(16, 6);
        let shares = [(0.2, 0.0), (0.3, 0.0), (0.5, 0.0)];
        let r = noma_rates(&cfg, &c, &noma_alloc(&c, &shares)).unwrap();
        let tau = data_fraction(&cfg);
        let m_bar = noma_array_gain(16, 6);
        let direct: f64 = c
            .center_beta
            .iter()
            .zip(shares)
            .map(|(b, (p, _))| tau * (1.0 + m_bar * b * p).log2())
            .sum();
        assert_relative_eq!(r.sum_rate, direct, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn edge_rate_behaviour(be in 1e-4f64..1e2, pc in 1e-3f64..1.0, pe in 0.0f64..1.0, dp in 1e-3f64..0.5) {
            let c = pair_gains(&[1e3, be.min(1e2)]).unwrap();
            let cfg = config(8, 2);
            let tau = data_fraction(&cfg);
            let rate = |pc: f64, pe: f64| noma_rates(&cfg, &c, &noma_alloc(&c, &[(pc, pe)])).unwrap().per_device_rate[1];
            let base = rate(pc, pe);
            prop_assert!(rate(pc, pe + dp) >= base);
            prop_assert!(rate(pc + dp, pe) <= base);
            prop_assert!(base <= tau * (1.0 + pe / pc).log2() + 1e-15);
            if pe > 0.0 {
                prop_assert!(base < tau * (1.0 + pe / pc).log2());
            }
        }

        #[test]
        fn rates_nonnegative_and_monotone(beta in prop::collection::vec(1e-3f64..10.0, 2..16), p in 0.0f64..1.0, dp in 1e-6f64..1.0) {
            let k = beta.len();
            let cfg = config(32, k);
            let drop = DeviceDrop::from_gains(beta);
            let mut a = epa_mimo(&cfg);
            a.power[0] = p;
            let r0 = mimo_rates(&cfg, &drop, &a).unwrap();
            a.power[0] = p + dp;
            let r1 = mimo_rates(&cfg, &drop, &a).unwrap();
            prop_assert!(r0.per_device_rate.iter().all(|x| *x >= 0.0));
            prop_assert!(r1.per_device_rate[0] >= r0.per_device_rate[0]);
            prop_assert!((r0.sum_rate - r0.per_device_rate.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}
