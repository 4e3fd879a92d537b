//! Device drops, large-scale fading and center/edge pairing.

use rand::Rng;

use crate::config::{PathlossMode, SystemConfig};
use crate::error::{Error, Result};

/// One random realization of device positions.
///
/// Devices `0..K/2` are drawn in the center annulus and `K/2..K` in the edge
/// annulus. Angles are carried for plotting only; pairs are assumed aligned
/// with the BS so nothing downstream reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceDrop {
    pub distances: Vec<f64>,
    pub angles: Vec<f64>,
    /// Noise-normalized linear large-scale gain per device.
    pub beta: Vec<f64>,
}

impl DeviceDrop {
    /// Drop with prescribed gains and no geometry, for tests and oracles.
    pub fn from_gains(beta: Vec<f64>) -> Self {
        let k = beta.len();
        DeviceDrop {
            distances: vec![f64::NAN; k],
            angles: vec![0.0; k],
            beta,
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// Radius uniform in area over the annulus `[inner, outer]`.
fn annulus_radius<R: Rng + ?Sized>(rng: &mut R, inner: f64, outer: f64) -> f64 {
    let u: f64 = rng.random();
    (inner * inner + u * (outer * outer - inner * inner)).sqrt()
}

/// Draws `K/2` devices uniformly over the center annulus `[d_min, d1]` and
/// `K/2` over the edge annulus `[d2, d_max]`.
pub fn drop_devices<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<DeviceDrop> {
    config.validate()?;
    let k = config.devices;
    if k % 2 != 0 {
        return Err(Error::OddDevices(k));
    }
    let half = k / 2;
    let mut distances = Vec::with_capacity(k);
    let mut angles = Vec::with_capacity(k);
    for i in 0..k {
        let (inner, outer) = if i < half {
            (config.d_min, config.d1)
        } else {
            (config.d2, config.d_max)
        };
        distances.push(annulus_radius(rng, inner, outer));
        angles.push(rng.random::<f64>() * std::f64::consts::TAU);
    }
    let beta = distances.iter().map(|&d| pathloss_linear(d, config)).collect();
    Ok(DeviceDrop {
        distances,
        angles,
        beta,
    })
}

/// Linear, noise-normalized large-scale gain at distance `d` (meters).
pub fn pathloss_linear(d: f64, config: &SystemConfig) -> f64 {
    debug_assert!(d > 0.0);
    let xi = config.pathloss_exponent;
    match config.pathloss_mode {
        PathlossMode::NormalizedReference => (d / config.d_ref).powf(-xi),
        PathlossMode::PaperDb => {
            let attenuation_db = config.beta0_db + 10.0 * xi * d.log10();
            10f64.powf(-(attenuation_db + config.noise_norm_db) / 10.0)
        }
    }
}

/// Center/edge partition and mirror pairing.
///
/// Cluster `k` joins the k-th strongest device with the k-th weakest one.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub devices: usize,
    /// Strongest half, gains descending.
    pub center_ids: Vec<usize>,
    /// Weakest half, gains ascending: `edge_ids[k]` pairs with `center_ids[k]`.
    pub edge_ids: Vec<usize>,
    pub center_beta: Vec<f64>,
    pub edge_beta: Vec<f64>,
    /// `center_beta[k] - edge_beta[k]`.
    pub delta_beta: Vec<f64>,
}

impl Clustering {
    pub fn clusters(&self) -> usize {
        self.center_ids.len()
    }

    /// `(center, edge)` device indices per cluster.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.center_ids.iter().copied().zip(self.edge_ids.iter().copied())
    }
}

pub fn partition_and_pair(drop: &DeviceDrop) -> Result<Clustering> {
    pair_gains(&drop.beta)
}

/// Sorts by gain (descending, ties by device index) and mirror-pairs.
pub fn pair_gains(beta: &[f64]) -> Result<Clustering> {
    let k = beta.len();
    if k == 0 || k % 2 != 0 {
        return Err(Error::OddDevices(k));
    }
    if let Some((device, &gain)) = beta.iter().enumerate().find(|(_, b)| !(**b > 0.0)) {
        return Err(Error::NonPositiveGain { device, gain });
    }
    let mut order: Vec<usize> = (0..k).collect();
    // stable: equal gains keep index order
    order.sort_by(|&a, &b| beta[b].total_cmp(&beta[a]));

    let half = k / 2;
    let center_ids: Vec<usize> = order[..half].to_vec();
    let edge_ids: Vec<usize> = order[half..].iter().rev().copied().collect();
    let center_beta: Vec<f64> = center_ids.iter().map(|&i| beta[i]).collect();
    let edge_beta: Vec<f64> = edge_ids.iter().map(|&i| beta[i]).collect();
    let delta_beta = center_beta
        .iter()
        .zip(&edge_beta)
        .map(|(c, e)| c - e)
        .collect();
    Ok(Clustering {
        devices: k,
        center_ids,
        edge_ids,
        center_beta,
        edge_beta,
        delta_beta,
    })
}
