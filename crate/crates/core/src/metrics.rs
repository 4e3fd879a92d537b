//! Fairness, area-under-curve and SE-EE trade-off metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jain's index `(sum R)^2 / (population * sum R^2)`.
///
/// `population` is normally `rates.len()`; it may differ when dividing by
/// the antenna count instead. Returns 0 when every rate is 0.
pub fn jain_index(rates: &[f64], population: usize) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Input("Jain index of an empty rate vector".into()));
    }
    if population == 0 {
        return Err(Error::Input("Jain index population must be positive".into()));
    }
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if sum_sq == 0.0 {
        return Ok(0.0);
    }
    Ok(sum * sum / (population as f64 * sum_sq))
}

/// A metric sampled on an ascending loading grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSamples {
    rho: Vec<f64>,
    value: Vec<f64>,
}

impl CurveSamples {
    pub fn new(rho: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if rho.len() != value.len() {
            return Err(Error::Curve(format!(
                "{} loadings but {} values",
                rho.len(),
                value.len()
            )));
        }
        if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Curve("loadings must be finite and non-negative".into()));
        }
        if rho.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Curve("loadings must be strictly increasing".into()));
        }
        if value.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Curve("values must be finite and non-negative".into()));
        }
        Ok(CurveSamples { rho, value })
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn value_at(&self, rho: f64) -> Option<f64> {
        let i = self.rho.partition_point(|r| *r < rho);
        if i == self.rho.len() {
            return None;
        }
        if self.rho[i] == rho {
            return Some(self.value[i]);
        }
        if i == 0 {
            return None;
        }
        let (r0, r1) = (self.rho[i - 1], self.rho[i]);
        let (v0, v1) = (self.value[i - 1], self.value[i]);
        Some(v0 + (v1 - v0) * (rho - r0) / (r1 - r0))
    }

    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.value)
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Trapezoidal area under the curve divided by `antennas`, with the curve
/// pinned to zero at `rho = 0`.
pub fn area_under_curve(curve: &CurveSamples, antennas: usize) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::Curve("area needs at least two samples".into()));
    }
    if antennas == 0 {
        return Err(Error::Curve("antenna count must be positive".into()));
    }
    let mut area = 0.0;
    let (mut r_prev, mut v_prev) = (0.0, 0.0);
    for (&r, &v) in curve.rho.iter().zip(&curve.value) {
        area += 0.5 * (v + v_prev) * (r - r_prev);
        r_prev = r;
        v_prev = v;
    }
    Ok(area / antennas as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TradeoffCriterion {
    /// Maximize the product of the normalized curves.
    NormProduct,
    /// Minimize the gap between the normalized curves on the rising branch
    /// of the SE curve.
    NormCrossing,
}

impl TradeoffCriterion {
    pub const ALL: [TradeoffCriterion; 2] = [TradeoffCriterion::NormCrossing, TradeoffCriterion::NormProduct];

    pub fn as_str(self) -> &'static str {
        match self {
            TradeoffCriterion::NormProduct => "norm-product",
            TradeoffCriterion::NormCrossing => "norm-crossing",
        }
    }
}

impl fmt::Display for TradeoffCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for TradeoffCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm-product" => Ok(TradeoffCriterion::NormProduct),
            "norm-crossing" => Ok(TradeoffCriterion::NormCrossing),
            other => Err(Error::Input(format!("unknown trade-off criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Grid index of the selected loading.
    pub index: usize,
    pub rho: f64,
    /// Raw (unnormalized) SE at `rho`.
    pub se: f64,
    /// Raw (unnormalized) EE at `rho`.
    pub ee: f64,
}

fn min_max_normalize(values: &[f64], name: &str) -> Result<Vec<f64>> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Curve(format!("{name} curve is constant; cannot normalize")));
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Selects the SE-EE trade-off loading on a shared grid.
pub fn tradeoff_point(
    se: &CurveSamples,
    ee: &CurveSamples,
    criterion: TradeoffCriterion,
) -> Result<TradeoffPoint> {
    if se.rho != ee.rho {
        return Err(Error::Curve("SE and EE curves are sampled on different grids".into()));
    }
    if se.is_empty() {
        return Err(Error::Curve("empty curves".into()));
    }
    let s = min_max_normalize(&se.value, "SE")?;
    let e = min_max_normalize(&ee.value, "EE")?;
    let index = match criterion {
        TradeoffCriterion::NormProduct => {
            let prod: Vec<f64> = s.iter().zip(&e).map(|(a, b)| a * b).collect();
            argmax(&prod).expect("non-empty")
        }
        TradeoffCriterion::NormCrossing => {
            let start = s.windows(2).position(|w| w[1] > w[0]).unwrap_or(0);
            let peak = start + argmax(&s[start..]).expect("non-empty");
            let mut best = start;
            for i in start..=peak {
                if (s[i] - e[i]).abs() < (s[best] - e[best]).abs() {
                    best = i;
                }
            }
            best
        }
    };
    Ok(TradeoffPoint {
        index,
        rho: se.rho[index],
        se: se.value[index],
        ee: ee.value[index],
    })
}
