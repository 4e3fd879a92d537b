//! Monte-Carlo check of the closed-form ZF array gains.
//!
//! Draws i.i.d. Rayleigh channels, builds the exact multi-user
//! pseudo-inverse precoder (unit-norm columns) and measures the effective
//! gain `|h_k^T g_k|^2`. For an `M x N` channel this gain is a scaled
//! chi-squared variable with mean `M - N + 1`; the rate model uses `M - K`
//! (mMIMO, `N = K`) and `M + 1 - K/2` (NOMA, `N = K/2`), i.e. the two ends of
//! the bracket `[M - N, M - N + 1]`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{pair_gains, DeviceDrop};
use crate::power::{AllocationResult, System};
use crate::rates::{log2_1p, mimo_rates, noma_rates};
use crate::rng::substream;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn column_norm_sqr(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, c).norm_sqr()).sum()
    }
}

/// `h^T g` (plain transpose, no conjugation).
pub fn bilinear(h: &[Complex64], g: &[Complex64]) -> Complex64 {
    h.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// `M x N` matrix of i.i.d. CN(0, 1) entries (real and imaginary parts each
/// with variance 1/2).
pub fn draw_channel<R: Rng + ?Sized>(antennas: usize, streams: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(antennas, streams);
    for v in h.data.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(re * scale, im * scale);
    }
    h
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::SingularGram);
        }
        let d = d.sqrt();
        l.set(j, j, Complex64::new(d, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Inverse of a Hermitian positive-definite matrix via its Cholesky factor.
fn hpd_inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows;
    let l = cholesky(a)?;
    let mut inv = CMatrix::zeros(n, n);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..n {
        // L y = e_col
        for i in 0..n {
            let mut s = if i == col { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        // L^H x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l.get(k, i).conj() * inv.get(k, col);
            }
            inv.set(i, col, s / l.get(i, i));
        }
    }
    Ok(inv)
}

/// Exact ZF precoder for the channel columns of `h` (`M x N`).
///
/// With `A = H^T`, the right pseudo-inverse `W = A^H (A A^H)^{-1}` satisfies
/// `h_i^T w_k = delta_ik`. Columns are returned normalized; the second value
/// holds the effective gains `|h_k^T g_k|^2 = 1 / ||w_k||^2`.
pub fn zf_precoder(h: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let (m, n) = (h.rows, h.cols);
    if n >= m {
        return Err(Error::TooManyStreams {
            streams: n,
            antennas: m,
        });
    }
    // gram[i][j] = sum_r H[r,i] conj(H[r,j])
    let mut gram = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: Complex64 = (0..m).map(|r| h.get(r, i) * h.get(r, j).conj()).sum();
            gram.set(i, j, s);
            gram.set(j, i, s.conj());
        }
    }
    let ginv = hpd_inverse(&gram)?;
    // W[r,k] = sum_j conj(H[r,j]) ginv[j,k]
    let mut w = CMatrix::zeros(m, n);
    for r in 0..m {
        for k in 0..n {
            let s: Complex64 = (0..n).map(|j| h.get(r, j).conj() * ginv.get(j, k)).sum();
            w.set(r, k, s);
        }
    }
    let mut gains = Vec::with_capacity(n);
    for k in 0..n {
        let norm_sqr = w.column_norm_sqr(k);
        gains.push(1.0 / norm_sqr);
        let scale = 1.0 / norm_sqr.sqrt();
        for r in 0..m {
            let v = w.get(r, k) * scale;
            w.set(r, k, v);
        }
    }
    Ok((w, gains))
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl GainEstimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        GainEstimate {
            mean,
            std_err: (var / n).sqrt(),
            trials: samples.len(),
        }
    }

    /// Whether `[lo, hi]` widened by `z` standard errors contains the mean.
    pub fn within(&self, lo: f64, hi: f64, z: f64) -> bool {
        self.mean >= lo - z * self.std_err && self.mean <= hi + z * self.std_err
    }
}

/// Effective ZF gain of the first stream over `trials` channel draws.
///
/// Each trial uses its own substream of `seed`, so the estimate does not
/// depend on thread count.
pub fn empirical_array_gain(antennas: usize, streams: usize, trials: usize, seed: u64) -> Result<GainEstimate> {
    if streams == 0 || streams >= antennas {
        return Err(Error::TooManyStreams { streams, antennas });
    }
    if trials < 100 {
        return Err(Error::Input(format!("at least 100 trials required, got {trials}")));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, &[antennas as u64, streams as u64, t as u64]);
            let h = draw_channel(antennas, streams, &mut rng);
            zf_precoder(&h).map(|(_, g)| g[0])
        })
        .collect::<Result<_>>()?;
    Ok(GainEstimate::from_samples(&samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCheck {
    pub device: usize,
    /// "user", "center" or "edge".
    pub role: String,
    pub closed_form_rate: f64,
    pub empirical_rate: f64,
    /// `|empirical - closed| / empirical`, 0 when both vanish.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub system: System,
    pub antennas: usize,
    pub devices: usize,
    /// Number of ZF beams: `K` (mMIMO) or `K/2` (NOMA).
    pub streams: usize,
    /// Array gain used by the closed form.
    pub closed_form_gain: f64,
    /// `[M - N, M - N + 1]`.
    pub bracket: (f64, f64),
    /// Mean of `SINR / (beta p)` over the served (center) devices.
    pub empirical_gain: GainEstimate,
    /// Empirical gain inside the bracket within 3 standard errors.
    pub bracket_ok: bool,
    /// Closed-form gain is one of the bracket ends.
    pub closed_form_in_bracket: bool,
    /// `1 / (M - N)`: the relative size of the +-1 convention gap.
    pub convention_gap: f64,
    /// Largest `|h_i^T g_k|` over all realizations and `i != k`.
    pub max_leakage: f64,
    pub devices_checked: Vec<DeviceCheck>,
}

fn rel_error(empirical: f64, closed: f64) -> f64 {
    if empirical == 0.0 && closed == 0.0 {
        0.0
    } else {
        (empirical - closed).abs() / empirical.abs().max(closed.abs())
    }
}

struct TrialOutcome {
    rates: Vec<f64>,
    gains: Vec<f64>,
    leakage: f64,
}

/// Compares closed-form rates against empirical ergodic rates computed from
/// explicit channel draws and ZF beams.
///
/// mMIMO: one beam per device. NOMA: one beam per cluster, computed on the
/// center devices' channels; the edge device is taken as spatially aligned
/// with its center partner (same small-scale vector), the center device
/// cancels the edge signal, and the edge device treats the center signal as
/// noise.
pub fn validate_closed_form(
    config: &SystemConfig,
    drop: &DeviceDrop,
    allocation: &AllocationResult,
    trials: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let m = config.antennas;
    let k = drop.len();
    if allocation.power.len() != k {
        return Err(Error::Input("allocation and drop sizes differ".into()));
    }
    if trials == 0 {
        return Err(Error::Input("trials must be positive".into()));
    }
    let config = config.clone().with_devices(k);
    let tau = crate::rates::data_fraction(&config);
    let (streams, closed, roles, beam_of): (usize, Vec<f64>, Vec<&str>, Vec<usize>) = match allocation.system {
        System::Mmimo => {
            let r = mimo_rates(&config, drop, allocation)?;
            (k, r.per_device_rate, vec!["user"; k], (0..k).collect())
        }
        System::Noma => {
            let c = pair_gains(&drop.beta)?;
            let r = noma_rates(&config, &c, allocation)?;
            let mut roles = vec![""; k];
            let mut beam = vec![0; k];
            for (j, (ci, ei)) in c.pairs().enumerate() {
                roles[ci] = "center";
                roles[ei] = "edge";
                beam[ci] = j;
                beam[ei] = j;
            }
            (k / 2, r.per_device_rate, roles, beam)
        }
    };
    if streams >= m {
        return Err(Error::TooManyStreams { streams, antennas: m });
    }

    // Beam order: cluster j is served by the j-th channel column. For NOMA
    // that column is the center device's channel.
    let system = allocation.system;
    let beta = &drop.beta;
    let power = &allocation.power;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, &[m as u64, k as u64, t as u64, 0x5eed]);
            let h = draw_channel(m, streams, &mut rng);
            let (g, gains) = zf_precoder(&h)?;
            let cols: Vec<Vec<Complex64>> = (0..streams).map(|j| h.column(j)).collect();
            let beams: Vec<Vec<Complex64>> = (0..streams).map(|j| g.column(j)).collect();
            // response[i][j] = |h_i^T g_j|^2
            let mut leakage: f64 = 0.0;
            let response: Vec<Vec<f64>> = cols
                .iter()
                .enumerate()
                .map(|(i, hi)| {
                    beams
                        .iter()
                        .enumerate()
                        .map(|(j, gj)| {
                            let v = bilinear(hi, gj);
                            if i != j {
                                leakage = leakage.max(v.norm());
                            }
                            v.norm_sqr()
                        })
                        .collect()
                })
                .collect();
            let mut beam_power = vec![0.0; streams];
            for d in 0..k {
                beam_power[beam_of[d]] += power[d];
            }
            let rates = (0..k)
                .map(|d| {
                    let j = beam_of[d];
                    let own = response[j][j];
                    let inter: f64 = (0..streams).filter(|&l| l != j).map(|l| beam_power[l] * response[j][l]).sum();
                    let sinr = match (system, roles[d]) {
                        (System::Noma, "edge") => {
                            let partner = beam_power[j] - power[d];
                            beta[d] * power[d] * own / (beta[d] * (partner * own + inter) + 1.0)
                        }
                        _ => beta[d] * power[d] * own / (beta[d] * inter + 1.0),
                    };
                    tau * log2_1p(sinr)
                })
                .collect();
            Ok(TrialOutcome {
                rates,
                gains,
                leakage,
            })
        })
        .collect::<Result<_>>()?;

    let mut mean_rate = vec![0.0; k];
    let mut gain_samples = Vec::with_capacity(trials * streams);
    let mut max_leakage: f64 = 0.0;
    for o in &outcomes {
        for (acc, r) in mean_rate.iter_mut().zip(&o.rates) {
            *acc += r;
        }
        gain_samples.extend_from_slice(&o.gains);
        max_leakage = max_leakage.max(o.leakage);
    }
    for r in mean_rate.iter_mut() {
        *r /= trials as f64;
    }
    let lo = (m - streams) as f64;
    let bracket = (lo, lo + 1.0);
    let closed_form_gain = match system {
        System::Mmimo => crate::rates::mimo_array_gain(m, k),
        System::Noma => crate::rates::noma_array_gain(m, k),
    };
    // gains of one realization are exchangeable but not independent; use
    // per-trial averages for the standard error
    let per_trial: Vec<f64> = outcomes
        .iter()
        .map(|o| o.gains.iter().sum::<f64>() / o.gains.len() as f64)
        .collect();
    let empirical_gain = GainEstimate::from_samples(&per_trial);
    let devices_checked = (0..k)
        .map(|d| DeviceCheck {
            device: d,
            role: roles[d].to_string(),
            closed_form_rate: closed[d],
            empirical_rate: mean_rate[d],
            rel_error: rel_error(mean_rate[d], closed[d]),
        })
        .collect();
    Ok(ValidationReport {
        system,
        antennas: m,
        devices: k,
        streams,
        closed_form_gain,
        bracket,
        bracket_ok: empirical_gain.within(bracket.0, bracket.1, 3.0),
        closed_form_in_bracket: closed_form_gain == bracket.0 || closed_form_gain == bracket.1,
        convention_gap: 1.0 / lo,
        max_leakage,
        empirical_gain,
        devices_checked,
    })
}
