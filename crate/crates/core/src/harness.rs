//! Loading sweep: Monte-Carlo averages of SE, EE, fairness, active fraction
//! and SIC violations over K = 2, 4, ..., 2M, plus the derived areas,
//! ratios and trade-off points.
//!
//! Output files:
//!
//! * `sweep.csv` — long format, one row per (K, system, policy) with header
//!   [`CSV_HEADER`]. NOMA points outside its operating range (K >= 2M - 1)
//!   are written with empty metric fields. `sic_violation_rate` is empty for
//!   mMIMO rows.
//! * `summary.json` — [`Summary`], carries `schema_version`.
//! * `manifest.json` — [`RunManifest`], replayable through `--config`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{FairnessPopulation, RunConfig, SicMode, SweepSettings, SystemConfig};
use crate::energy::{energy_efficiency, total_power};
use crate::error::{Error, Result};
use crate::geometry::{drop_devices, partition_and_pair, Clustering, DeviceDrop};
use crate::metrics::{area_under_curve, jain_index, tradeoff_point, CurveSamples, TradeoffCriterion};
use crate::power::{allocate, sic_feasibility, Policy, System};
use crate::rates::{mimo_rates, noma_in_range, noma_rates};
use crate::rng::substream;

/// Version of the `sweep.csv` / `summary.json` / `manifest.json` layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 10] = [
    "rho",
    "K",
    "system",
    "policy",
    "se_mean",
    "se_stderr",
    "ee_mean",
    "fairness_mean",
    "active_frac",
    "sic_violation_rate",
];

/// A (system, policy) pair. WF is mMIMO-only and Δ-WF NOMA-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Combo {
    pub system: System,
    pub policy: Policy,
}

impl Combo {
    pub const fn new(system: System, policy: Policy) -> Self {
        Combo { system, policy }
    }

    /// The six valid combinations, mMIMO first.
    pub const fn all() -> [Combo; 6] {
        [
            Combo::new(System::Mmimo, Policy::Epa),
            Combo::new(System::Mmimo, Policy::Picpa),
            Combo::new(System::Mmimo, Policy::Wf),
            Combo::new(System::Noma, Policy::Epa),
            Combo::new(System::Noma, Policy::Picpa),
            Combo::new(System::Noma, Policy::Dwf),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match (self.system, self.policy) {
            (System::Noma, Policy::Wf) | (System::Mmimo, Policy::Dwf) => Err(Error::IncompatibleCombo {
                system: self.system.as_str(),
                policy: self.policy.as_str(),
            }),
            _ => Ok(()),
        }
    }

    /// The combination on the other system with the matching policy
    /// (WF <-> Δ-WF).
    pub fn counterpart(&self) -> Combo {
        match (self.system, self.policy) {
            (System::Mmimo, Policy::Wf) => Combo::new(System::Noma, Policy::Dwf),
            (System::Noma, Policy::Dwf) => Combo::new(System::Mmimo, Policy::Wf),
            (System::Mmimo, p) => Combo::new(System::Noma, p),
            (System::Noma, p) => Combo::new(System::Mmimo, p),
        }
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("{}-{}", self.system, self.policy))
    }
}

impl FromStr for Combo {
    type Err = Error;

    /// `"noma-epa"`, `"mmimo-wf"`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (sys, pol) = s
            .split_once('-')
            .ok_or_else(|| Error::Input(format!("expected <system>-<policy>, got `{s}`")))?;
        let combo = Combo::new(sys.parse()?, pol.parse()?);
        combo.validate()?;
        Ok(combo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
}

/// `K = 2, 4, ..., 2M`.
pub fn loading_grid(antennas: usize) -> Vec<GridPoint> {
    (1..=antennas)
        .map(|i| {
            let k = 2 * i;
            GridPoint {
                k,
                rho: k as f64 / antennas as f64,
            }
        })
        .collect()
}

/// Averages at one grid point for one combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub se_mean: f64,
    pub se_stderr: f64,
    pub ee_mean: f64,
    pub fairness_mean: f64,
    pub active_frac: f64,
    /// Share of active clusters failing the SIC condition (NOMA only).
    pub sic_violation_rate: Option<f64>,
}

/// Metrics of a single drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub se: f64,
    pub ee: f64,
    pub fairness: f64,
    pub active_frac: f64,
    /// `(violations, active clusters)` for NOMA.
    pub sic: Option<(usize, usize)>,
}

/// Allocates, evaluates rates and derives every per-drop metric.
///
/// `config.devices` must equal the drop size; `p_tot` is the total consumed
/// power at this (M, K).
pub fn evaluate_trial(
    config: &SystemConfig,
    drop: &DeviceDrop,
    clustering: Option<&Clustering>,
    combo: Combo,
    p_tot: f64,
    sic_mode: SicMode,
    fairness: FairnessPopulation,
) -> Result<TrialMetrics> {
    let alloc = allocate(config, drop, clustering, combo.system, combo.policy)?;
    let (rates, sic) = match combo.system {
        System::Mmimo => (mimo_rates(config, drop, &alloc)?, None),
        System::Noma => {
            let owned;
            let c = match clustering {
                Some(c) => c,
                None => {
                    owned = partition_and_pair(drop)?;
                    &owned
                }
            };
            let r = noma_rates(config, c, &alloc)?;
            let checks = sic_feasibility(c, &alloc, config, sic_mode)?;
            let mut active = 0;
            let mut bad = 0;
            for ((ci, ei), chk) in c.pairs().zip(&checks) {
                if alloc.power[ci] + alloc.power[ei] > 0.0 {
                    active += 1;
                    if !chk.feasible {
                        bad += 1;
                    }
                }
            }
            (r, Some((bad, active)))
        }
    };
    let population = match fairness {
        FairnessPopulation::Devices => drop.len(),
        FairnessPopulation::Antennas => config.antennas,
    };
    Ok(TrialMetrics {
        se: rates.sum_rate,
        ee: energy_efficiency(rates.sum_rate, p_tot)?,
        fairness: jain_index(&rates.per_device_rate, population)?,
        active_frac: alloc.active_fraction(),
        sic,
    })
}

/// Running mean / variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std_err(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    se: Welford,
    ee: Welford,
    fairness: Welford,
    active: Welford,
    sic_bad: usize,
    sic_active: usize,
}

impl Accum {
    fn push(&mut self, t: &TrialMetrics) {
        self.se.push(t.se);
        self.ee.push(t.ee);
        self.fairness.push(t.fairness);
        self.active.push(t.active_frac);
        if let Some((bad, active)) = t.sic {
            self.sic_bad += bad;
            self.sic_active += active;
        }
    }

    fn finish(&self, system: System) -> PointStats {
        PointStats {
            se_mean: self.se.mean,
            se_stderr: self.se.std_err(),
            ee_mean: self.ee.mean,
            fairness_mean: self.fairness.mean,
            active_frac: self.active.mean,
            sic_violation_rate: match system {
                System::Mmimo => None,
                System::Noma if self.sic_active == 0 => Some(0.0),
                System::Noma => Some(self.sic_bad as f64 / self.sic_active as f64),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub trials: usize,
    /// SHA-256 of the resolved config in TOML form.
    pub config_hash: String,
    pub pathloss_mode: String,
    /// Unit of `T` in the computational power terms.
    pub coherence_interval_units: String,
    /// Drops shared across policies at each grid point.
    pub paired_drops: bool,
    pub sic_mode: SicMode,
    pub fairness_population: FairnessPopulation,
}

impl SweepMetadata {
    pub fn for_config(cfg: &RunConfig) -> Self {
        SweepMetadata {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.sweep.seed,
            trials: cfg.sweep.trials,
            config_hash: config_hash(cfg),
            pathloss_mode: cfg.scenario.pathloss_mode.to_string(),
            coherence_interval_units: "symbols".into(),
            paired_drops: true,
            sic_mode: cfg.sweep.sic_mode,
            fairness_population: cfg.sweep.fairness_population,
        }
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-combination series over the loading grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub antennas: usize,
    pub grid: Vec<GridPoint>,
    pub combos: Vec<Combo>,
    /// `cells[c][g]`: stats of `combos[c]` at `grid[g]`; `None` where the
    /// closed form is undefined.
    pub cells: Vec<Vec<Option<PointStats>>>,
    /// Absent when the result was read back from CSV.
    pub metadata: Option<SweepMetadata>,
}

impl SweepResult {
    pub fn combo_index(&self, combo: Combo) -> Option<usize> {
        self.combos.iter().position(|c| *c == combo)
    }

    /// Present points of one combination, in grid order.
    pub fn series(&self, combo: Combo) -> Vec<(GridPoint, PointStats)> {
        match self.combo_index(combo) {
            Some(c) => self
                .grid
                .iter()
                .zip(&self.cells[c])
                .filter_map(|(g, s)| s.map(|s| (*g, s)))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn at(&self, combo: Combo, k: usize) -> Option<PointStats> {
        let c = self.combo_index(combo)?;
        let g = self.grid.iter().position(|g| g.k == k)?;
        self.cells[c][g]
    }

    /// SE or EE (selected by `f`) as a curve over the present points.
    pub fn curve(&self, combo: Combo, f: impl Fn(&PointStats) -> f64) -> Result<CurveSamples> {
        let (rho, value) = self.series(combo).iter().map(|(g, s)| (g.rho, f(s))).unzip();
        CurveSamples::new(rho, value)
    }
}

/// Runs the sweep on the current rayon pool.
///
/// Each (K, trial) pair has its own RNG substream; the drop is shared by
/// every combination at that point. Grid points run in parallel, trials
/// within a point sequentially, so the output does not depend on the
/// number of workers.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let SweepSettings {
        trials,
        seed,
        ref combos,
        sic_mode,
        fairness_population,
    } = cfg.sweep;
    let m = cfg.scenario.antennas;
    let grid = loading_grid(m);
    let per_point: Vec<Vec<Option<PointStats>>> = grid
        .par_iter()
        .map(|g| -> Result<Vec<Option<PointStats>>> {
            let sc = cfg.scenario.clone().with_devices(g.k);
            let p_tot = total_power(&sc, &cfg.energy)?.total();
            let noma_ok = noma_in_range(m, g.k);
            let mut acc = vec![Accum::default(); combos.len()];
            for t in 0..trials {
                let mut rng = substream(seed, &[g.k as u64, t as u64]);
                let drop = drop_devices(&sc, &mut rng)?;
                let clustering = if noma_ok && combos.iter().any(|c| c.system == System::Noma) {
                    Some(partition_and_pair(&drop)?)
                } else {
                    None
                };
                for (a, combo) in acc.iter_mut().zip(combos) {
                    if combo.system == System::Noma && !noma_ok {
                        continue;
                    }
                    let tm = evaluate_trial(
                        &sc,
                        &drop,
                        clustering.as_ref(),
                        *combo,
                        p_tot,
                        sic_mode,
                        fairness_population,
                    )?;
                    a.push(&tm);
                }
            }
            Ok(acc
                .iter()
                .zip(combos)
                .map(|(a, c)| (c.system == System::Mmimo || noma_ok).then(|| a.finish(c.system)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let cells = (0..combos.len())
        .map(|c| per_point.iter().map(|p| p[c]).collect())
        .collect();
    Ok(SweepResult {
        antennas: m,
        grid,
        combos: combos.clone(),
        cells,
        metadata: Some(SweepMetadata::for_config(cfg)),
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers (`None`: rayon's
/// default).
pub fn run_sweep_with_threads(cfg: &RunConfig, threads: Option<usize>) -> Result<SweepResult> {
    match threads {
        None => run_sweep(cfg),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Input(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_sweep(cfg))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub system: System,
    pub policy: Policy,
    /// Per-antenna area under SE(rho).
    pub se_area: f64,
    /// Per-antenna area under EE(rho).
    pub ee_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    /// "epa", "picpa" or "wf/dwf".
    pub policy: String,
    pub antennas: usize,
    /// NOMA area over mMIMO area; `None` if the mMIMO area is zero.
    pub se_ratio: Option<f64>,
    pub ee_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub system: System,
    pub policy: Policy,
    pub criterion: TradeoffCriterion,
    pub rho: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub se: f64,
    pub ee: f64,
    pub active_frac: f64,
    pub fairness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub system: System,
    pub policy: Policy,
    pub rho: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub se: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub antennas: usize,
    pub areas: Vec<AreaRow>,
    pub ratios: Vec<RatioRow>,
    pub tradeoff: Vec<TradeoffRow>,
    pub peaks: Vec<PeakRow>,
    pub metadata: Option<SweepMetadata>,
}

impl Summary {
    pub fn area(&self, combo: Combo) -> Option<&AreaRow> {
        self.areas
            .iter()
            .find(|a| a.system == combo.system && a.policy == combo.policy)
    }

    pub fn tradeoff_for(&self, combo: Combo, criterion: TradeoffCriterion) -> Option<&TradeoffRow> {
        self.tradeoff
            .iter()
            .find(|t| t.system == combo.system && t.policy == combo.policy && t.criterion == criterion)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Per-combination areas over the present points.
pub fn areas(result: &SweepResult) -> Result<Vec<AreaRow>> {
    result
        .combos
        .iter()
        .map(|&combo| {
            let se = result.curve(combo, |s| s.se_mean)?;
            let ee = result.curve(combo, |s| s.ee_mean)?;
            Ok(AreaRow {
                system: combo.system,
                policy: combo.policy,
                se_area: area_under_curve(&se, result.antennas)?,
                ee_area: area_under_curve(&ee, result.antennas)?,
            })
        })
        .collect()
}

/// NOMA / mMIMO area ratios for each policy present on both systems.
pub fn area_ratios(antennas: usize, areas: &[AreaRow]) -> Vec<RatioRow> {
    let find = |c: Combo| areas.iter().find(|a| a.system == c.system && a.policy == c.policy);
    [Policy::Epa, Policy::Picpa, Policy::Wf]
        .into_iter()
        .filter_map(|p| {
            let mm = find(Combo::new(System::Mmimo, p))?;
            let no = find(Combo::new(System::Mmimo, p).counterpart())?;
            Some(RatioRow {
                policy: if p == Policy::Wf { "wf/dwf".into() } else { p.to_string() },
                antennas,
                se_ratio: ratio(no.se_area, mm.se_area),
                ee_ratio: ratio(no.ee_area, mm.ee_area),
            })
        })
        .collect()
}

/// Trade-off rows for one combination; curves that cannot be normalized
/// (constant) are skipped.
pub fn tradeoff_rows(result: &SweepResult, combo: Combo, criterion: TradeoffCriterion) -> Result<Option<TradeoffRow>> {
    let series = result.series(combo);
    let se = result.curve(combo, |s| s.se_mean)?;
    let ee = result.curve(combo, |s| s.ee_mean)?;
    let point = match tradeoff_point(&se, &ee, criterion) {
        Ok(p) => p,
        Err(Error::Curve(msg)) => {
            log::warn!("no trade-off point for {combo}: {msg}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let (g, s) = series[point.index];
    Ok(Some(TradeoffRow {
        system: combo.system,
        policy: combo.policy,
        criterion,
        rho: point.rho,
        k: g.k,
        se: point.se,
        ee: point.ee,
        active_frac: s.active_frac,
        fairness: s.fairness_mean,
    }))
}

pub fn summarize(result: &SweepResult) -> Result<Summary> {
    let areas = areas(result)?;
    let ratios = area_ratios(result.antennas, &areas);
    let mut tradeoff = Vec::new();
    for criterion in TradeoffCriterion::ALL {
        for &combo in &result.combos {
            tradeoff.extend(tradeoff_rows(result, combo, criterion)?);
        }
    }
    let peaks = result
        .combos
        .iter()
        .filter_map(|&combo| {
            let series = result.series(combo);
            let (g, s) = series
                .iter()
                .fold(None::<&(GridPoint, PointStats)>, |best, cur| match best {
                    Some(b) if b.1.se_mean >= cur.1.se_mean => Some(b),
                    _ => Some(cur),
                })?;
            Some(PeakRow {
                system: combo.system,
                policy: combo.policy,
                rho: g.rho,
                k: g.k,
                se: s.se_mean,
            })
        })
        .collect();
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        antennas: result.antennas,
        areas,
        ratios,
        tradeoff,
        peaks,
        metadata: result.metadata.clone(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes the long-format table. Floats use the shortest round-trip
/// representation, so reading the file back recovers every value exactly.
pub fn sweep_csv_string(result: &SweepResult) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for (g, point) in result.grid.iter().enumerate() {
        for (c, combo) in result.combos.iter().enumerate() {
            let s = result.cells[c][g];
            let fields = [
                point.rho.to_string(),
                point.k.to_string(),
                combo.system.to_string(),
                combo.policy.to_string(),
                opt(s.map(|s| s.se_mean)),
                opt(s.map(|s| s.se_stderr)),
                opt(s.map(|s| s.ee_mean)),
                opt(s.map(|s| s.fairness_mean)),
                opt(s.map(|s| s.active_frac)),
                opt(s.and_then(|s| s.sic_violation_rate)),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, sweep_csv_string(result)).map_err(|e| Error::io(path, e))
}

fn parse_field<T: FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(path, format!("line {line}: bad {name} `{raw}`")))
}

fn parse_opt(path: &Path, line: usize, name: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, name, raw).map(Some)
    }
}

/// Reads a `sweep.csv` back. The antenna count is recovered from `K / rho`.
pub fn read_sweep_csv(path: &Path) -> Result<SweepResult> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let header = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::parse(path, format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut grid: Vec<GridPoint> = Vec::new();
    let mut combos: Vec<Combo> = Vec::new();
    let mut entries: Vec<(usize, usize, Option<PointStats>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let f = |j: usize| rec.get(j).unwrap_or("");
        let rho: f64 = parse_field(path, line, "rho", f(0))?;
        let k: usize = parse_field(path, line, "K", f(1))?;
        let combo = Combo::new(
            parse_field(path, line, "system", f(2))?,
            parse_field(path, line, "policy", f(3))?,
        );
        let g = match grid.iter().position(|p| p.k == k) {
            Some(g) => g,
            None => {
                grid.push(GridPoint { k, rho });
                grid.len() - 1
            }
        };
        let c = match combos.iter().position(|x| *x == combo) {
            Some(c) => c,
            None => {
                combos.push(combo);
                combos.len() - 1
            }
        };
        let se_mean = parse_opt(path, line, "se_mean", f(4))?;
        let stats = match se_mean {
            None => None,
            Some(se_mean) => Some(PointStats {
                se_mean,
                se_stderr: parse_field(path, line, "se_stderr", f(5))?,
                ee_mean: parse_field(path, line, "ee_mean", f(6))?,
                fairness_mean: parse_field(path, line, "fairness_mean", f(7))?,
                active_frac: parse_field(path, line, "active_frac", f(8))?,
                sic_violation_rate: parse_opt(path, line, "sic_violation_rate", f(9))?,
            }),
        };
        entries.push((c, g, stats));
    }
    let first = grid
        .first()
        .ok_or_else(|| Error::parse(path, "no data rows"))?;
    let antennas = (first.k as f64 / first.rho).round() as usize;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&g| grid[g].k);
    let mut slot = vec![0; grid.len()];
    for (new, &old) in order.iter().enumerate() {
        slot[old] = new;
    }
    let mut cells = vec![vec![None; grid.len()]; combos.len()];
    for (c, g, s) in entries {
        cells[c][slot[g]] = s;
    }
    let grid = order.iter().map(|&g| grid[g]).collect();
    Ok(SweepResult {
        antennas,
        grid,
        combos,
        cells,
        metadata: None,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Snapshot written next to every sweep. `resolved_config` has all
/// defaults filled in, so `sweep --config manifest.json` repeats the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub preset: Option<String>,
    pub output_dir: PathBuf,
    pub resolved_config: RunConfig,
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small(m: usize, trials: usize) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.scenario.antennas = m;
        cfg.sweep.trials = trials;
        cfg
    }

    #[test]
    fn combos() {
        assert_eq!(Combo::all().len(), 6);
        for c in Combo::all() {
            c.validate().unwrap();
            assert_eq!(c.counterpart().counterpart(), c);
            assert_eq!(c.to_string().parse::<Combo>().unwrap(), c);
        }
        assert!(Combo::new(System::Noma, Policy::Wf).validate().is_err());
        assert!(Combo::new(System::Mmimo, Policy::Dwf).validate().is_err());
        assert!("noma-wf".parse::<Combo>().is_err());
    }

    #[test]
    fn grid_shape() {
        let g = loading_grid(64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0].k, 2);
        assert_eq!(g[63].k, 128);
        assert_eq!(g[63].rho, 2.0);
    }

    #[test]
    fn sweep_structure() {
        let r = run_sweep(&small(8, 3)).unwrap();
        assert_eq!(r.grid.len(), 8);
        for combo in Combo::all() {
            let c = r.combo_index(combo).unwrap();
            for (g, cell) in r.grid.iter().zip(&r.cells[c]) {
                match combo.system {
                    System::Mmimo => {
                        let s = cell.unwrap();
                        if g.k >= 8 {
                            assert_eq!(s.se_mean, 0.0);
                            assert_eq!(s.ee_mean, 0.0);
                        }
                        assert!(s.sic_violation_rate.is_none());
                    }
                    System::Noma => assert_eq!(cell.is_some(), g.k + 1 < 16),
                }
                if let Some(s) = cell {
                    assert!(s.se_stderr >= 0.0);
                    assert!((0.0..=1.0).contains(&s.active_frac));
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let cfg = small(8, 1);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep_with_threads(&cfg, Some(1)).unwrap();
        assert_eq!(sweep_csv_string(&a), sweep_csv_string(&b));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&a, &path).unwrap();
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back.antennas, 8);
        assert_eq!(back.grid, a.grid);
        assert_eq!(back.cells, a.cells);
        let s1 = summarize(&a).unwrap();
        let s2 = summarize(&back).unwrap();
        assert_eq!(s1.areas, s2.areas);
    }

    fn synthetic(noma_scale: f64) -> SweepResult {
        let grid = loading_grid(4);
        let base: Vec<f64> = grid.iter().map(|g| 1.0 + g.rho * (2.0 - g.rho)).collect();
        let cell = |v: f64| {
            Some(PointStats {
                se_mean: v,
                se_stderr: 0.0,
                ee_mean: v / 10.0,
                fairness_mean: 1.0,
                active_frac: 1.0,
                sic_violation_rate: None,
            })
        };
        SweepResult {
            antennas: 4,
            combos: vec![Combo::new(System::Mmimo, Policy::Epa), Combo::new(System::Noma, Policy::Epa)],
            cells: vec![
                base.iter().map(|&v| cell(v)).collect(),
                base.iter().map(|&v| cell(noma_scale * v)).collect(),
            ],
            grid,
            metadata: None,
        }
    }

    #[test]
    fn identical_curves_ratio_one() {
        let s = summarize(&synthetic(1.0)).unwrap();
        assert_eq!(s.areas.len(), 2);
        assert_eq!(s.ratios.len(), 1);
        assert_eq!(s.ratios[0].se_ratio, Some(1.0));
        assert_eq!(s.ratios[0].ee_ratio, Some(1.0));
    }

    #[test]
    fn scaled_curve_ratio() {
        let s = summarize(&synthetic(2.7)).unwrap();
        assert_relative_eq!(s.ratios[0].se_ratio.unwrap(), 2.7, max_relative = 1e-14);
        assert_relative_eq!(s.ratios[0].ee_ratio.unwrap(), 2.7, max_relative = 1e-14);
    }

    #[test]
    fn summary_rows_per_combo() {
        let r = run_sweep(&small(6, 2)).unwrap();
        let s = summarize(&r).unwrap();
        assert_eq!(s.areas.len(), 6);
        assert_eq!(s.peaks.len(), 6);
        assert_eq!(s.ratios.len(), 3);
        assert_eq!(s.metadata.as_ref().unwrap().schema_version, SCHEMA_VERSION);
        assert_eq!(s.metadata.as_ref().unwrap().config_hash.len(), 64);
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let combo = Combo::new(System::Mmimo, Policy::Epa);
        let a = run_sweep(&small(16, 200)).unwrap().at(combo, 8).unwrap().se_stderr;
        let b = run_sweep(&small(16, 400)).unwrap().at(combo, 8).unwrap().se_stderr;
        let ratio = b / a;
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.15, "{ratio}");
    }
}
