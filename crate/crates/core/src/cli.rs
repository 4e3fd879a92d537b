//! `nomasim` command line.
//!
//! ```text
//! nomasim sweep     --preset paper-m64 --out results/ --seed 42 --trials 1000
//! nomasim areas     --in results/sweep.csv
//! nomasim tradeoff  --in results/sweep.csv --criterion norm-crossing
//! nomasim validate  --m 16 --k 8 --system noma --trials 10000
//! nomasim plot-data --in m64/sweep.csv --in m128/sweep.csv --out plots/ --gnuplot
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PathlossMode, Preset, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{drop_devices, pair_gains, DeviceDrop};
use crate::harness::{
    self, area_ratios, areas, read_sweep_csv, run_sweep_with_threads, summarize, tradeoff_rows, write_json,
    write_sweep_csv, AreaRow, Combo, RatioRow, RunManifest, SweepResult, TradeoffRow,
};
use crate::metrics::TradeoffCriterion;
use crate::oracle::{empirical_array_gain, validate_closed_form, GainEstimate, ValidationReport};
use crate::power::{allocate, Policy, System};
use crate::rng::substream;

#[derive(Debug, Parser)]
#[command(name = "nomasim", version, about = "ZF massive MIMO vs. NOMA loading sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the loading sweep; writes sweep.csv, summary.json, manifest.json.
    Sweep(SweepArgs),
    /// Per-antenna SE/EE areas and NOMA/mMIMO ratios.
    Areas(DeriveArgs),
    /// SE-EE trade-off points.
    Tradeoff(TradeoffArgs),
    /// Monte-Carlo check of the closed-form array gains.
    Validate(ValidateArgs),
    /// Per-panel CSVs (and an optional gnuplot script) for plotting.
    PlotData(PlotArgs),
}

/// Flags shared by every command that may run a sweep.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["paper-m64", "paper-m128", "paper-m256"])]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_parser = ["normalized-reference", "paper-db"])]
    pub pathloss_mode: Option<String>,
    /// Worker cap; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    /// Defaults < preset or config file < command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(p)) => p.parse::<Preset>()?.config(),
            (None, None) => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sweep.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.sweep.trials = trials;
        }
        if let Some(mode) = &self.pathloss_mode {
            cfg.scenario.pathloss_mode = mode.parse::<PathlossMode>()?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Existing sweep.csv; without it a fresh sweep is run.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output directory (default: next to `--in`, else the current one).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub derive: DeriveArgs,
    /// Only this criterion (default: both).
    #[arg(long, value_parser = ["norm-crossing", "norm-product"])]
    pub criterion: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Antennas.
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Devices.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value = "noma")]
    pub system: String,
    #[arg(long, default_value = "epa")]
    pub policy: String,
    /// Use beta = 1 for every device instead of a random drop.
    #[arg(long)]
    pub unit_gains: bool,
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["paper-m64", "paper-m128", "paper-m256"])]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_parser = ["normalized-reference", "paper-db"])]
    pub pathloss_mode: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write validate.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// One sweep.csv per antenna count; repeatable.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "plots")]
    pub out: PathBuf,
    /// Also write plots.gp.
    #[arg(long)]
    pub gnuplot: bool,
}

/// Parses `argv` (program name first) and runs the command. Errors go to
/// stderr; the return value is the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Sweep(a) => sweep(a, argv),
        Command::Areas(a) => areas_cmd(a),
        Command::Tradeoff(a) => tradeoff_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::PlotData(a) => plot_data(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn sweep(a: SweepArgs, argv: &[String]) -> Result<()> {
    let started_at = harness::unix_now();
    let cfg = a.run.resolve()?;
    create_dir(&a.out)?;
    let result = run_sweep_with_threads(&cfg, a.run.threads)?;
    let summary = summarize(&result)?;
    write_sweep_csv(&result, &a.out.join("sweep.csv"))?;
    write_json(&summary, &a.out.join("summary.json"))?;
    let manifest = RunManifest {
        schema_version: harness::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "sweep".into(),
        argv: argv.to_vec(),
        config_path: a.run.config.clone(),
        preset: a.run.preset.clone(),
        output_dir: a.out.clone(),
        config_hash: harness::config_hash(&cfg),
        resolved_config: cfg,
        started_at,
        finished_at: harness::unix_now(),
    };
    write_json(&manifest, &a.out.join("manifest.json"))?;
    print_areas(&summary.areas, &summary.ratios);
    println!();
    print_tradeoff(&summary.tradeoff);
    println!("\nwrote {}/{{sweep.csv,summary.json,manifest.json}}", a.out.display());
    Ok(())
}

fn load_or_run(a: &DeriveArgs) -> Result<(SweepResult, PathBuf)> {
    match &a.input {
        Some(path) => {
            let out = a
                .out
                .clone()
                .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
            Ok((read_sweep_csv(path)?, out))
        }
        None => {
            let cfg = a.run.resolve()?;
            Ok((run_sweep_with_threads(&cfg, a.run.threads)?, a.out.clone().unwrap_or_default()))
        }
    }
}

fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    if !dir.as_os_str().is_empty() {
        create_dir(dir)?;
    }
    Ok(dir.join(name))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn print_areas(areas: &[AreaRow], ratios: &[RatioRow]) {
    println!("{:<8} {:<7} {:>12} {:>12}", "system", "policy", "S (SE area)", "E (EE area)");
    for a in areas {
        println!("{:<8} {:<7} {:>12.6} {:>12.6}", a.system, a.policy, a.se_area, a.ee_area);
    }
    if !ratios.is_empty() {
        println!("\n{:<8} {:>5} {:>10} {:>10}", "policy", "M", "S ratio", "E ratio");
        for r in ratios {
            println!(
                "{:<8} {:>5} {:>10} {:>10}",
                r.policy,
                r.antennas,
                fmt_opt(r.se_ratio),
                fmt_opt(r.ee_ratio)
            );
        }
    }
}

fn print_tradeoff(rows: &[TradeoffRow]) {
    println!(
        "{:<14} {:<8} {:<7} {:>7} {:>5} {:>10} {:>8} {:>7} {:>8}",
        "criterion", "system", "policy", "rho*", "K", "SE", "EE", "active", "fairness"
    );
    for t in rows {
        println!(
            "{:<14} {:<8} {:<7} {:>7.4} {:>5} {:>10.3} {:>8.4} {:>7.3} {:>8.4}",
            t.criterion, t.system, t.policy, t.rho, t.k, t.se, t.ee, t.active_frac, t.fairness
        );
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    w.write_record(header).map_err(|e| Error::parse(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn areas_cmd(a: DeriveArgs) -> Result<()> {
    let (result, dir) = load_or_run(&a)?;
    let rows = areas(&result)?;
    let ratios = area_ratios(result.antennas, &rows);
    print_areas(&rows, &ratios);
    write_csv(
        &out_path(&dir, "areas.csv")?,
        &["system", "policy", "M", "se_area", "ee_area"],
        rows.iter().map(|r| {
            vec![
                r.system.to_string(),
                r.policy.to_string(),
                result.antennas.to_string(),
                r.se_area.to_string(),
                r.ee_area.to_string(),
            ]
        }),
    )?;
    write_csv(
        &out_path(&dir, "ratios.csv")?,
        &["policy", "M", "se_ratio", "ee_ratio"],
        ratios.iter().map(|r| {
            vec![
                r.policy.clone(),
                r.antennas.to_string(),
                opt_str(r.se_ratio),
                opt_str(r.ee_ratio),
            ]
        }),
    )
}

fn tradeoff_cmd(a: TradeoffArgs) -> Result<()> {
    let (result, dir) = load_or_run(&a.derive)?;
    let criteria: Vec<TradeoffCriterion> = match &a.criterion {
        Some(c) => vec![c.parse()?],
        None => TradeoffCriterion::ALL.to_vec(),
    };
    let mut rows = Vec::new();
    for criterion in criteria {
        for &combo in &result.combos {
            rows.extend(tradeoff_rows(&result, combo, criterion)?);
        }
    }
    print_tradeoff(&rows);
    write_csv(
        &out_path(&dir, "tradeoff.csv")?,
        &["criterion", "system", "policy", "M", "rho", "K", "se", "ee", "active_frac", "fairness"],
        rows.iter().map(|t| {
            vec![
                t.criterion.to_string(),
                t.system.to_string(),
                t.policy.to_string(),
                result.antennas.to_string(),
                t.rho.to_string(),
                t.k.to_string(),
                t.se.to_string(),
                t.ee.to_string(),
                t.active_frac.to_string(),
                t.fairness.to_string(),
            ]
        }),
    )
}

#[derive(Debug, serde::Serialize)]
struct ValidateOutput {
    closed_form: ValidationReport,
    /// Array gain of the first stream over independent channel draws.
    array_gain: GainEstimate,
    array_gain_bracket_ok: bool,
}

fn validate_cmd(a: ValidateArgs) -> Result<()> {
    let run = RunArgs {
        config: a.config.clone(),
        preset: a.preset.clone(),
        seed: Some(a.seed),
        trials: None,
        pathloss_mode: a.pathloss_mode.clone(),
        threads: a.threads,
    };
    let cfg = run.resolve()?;
    let system: System = a.system.parse()?;
    let policy: Policy = a.policy.parse()?;
    Combo::new(system, policy).validate()?;
    let sc = cfg.scenario.clone().with_antennas(a.m).with_devices(a.k);
    let drop = if a.unit_gains {
        DeviceDrop::from_gains(vec![1.0; a.k])
    } else {
        drop_devices(&sc, &mut substream(a.seed, &[a.k as u64, u64::MAX]))?
    };
    let clustering = match system {
        System::Noma => Some(pair_gains(&drop.beta)?),
        System::Mmimo => None,
    };
    let alloc = allocate(&sc, &drop, clustering.as_ref(), system, policy)?;
    let body = || -> Result<ValidateOutput> {
        let closed_form = validate_closed_form(&sc, &drop, &alloc, a.trials, a.seed)?;
        let array_gain = empirical_array_gain(a.m, closed_form.streams, a.trials.max(100), a.seed)?;
        let (lo, hi) = closed_form.bracket;
        Ok(ValidateOutput {
            array_gain_bracket_ok: array_gain.within(hi, hi, 3.0) && lo < hi,
            array_gain,
            closed_form,
        })
    };
    let out = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Input(e.to_string()))?
            .install(body)?,
        None => body()?,
    };
    let json = serde_json::to_string_pretty(&out).map_err(|e| Error::Input(e.to_string()))?;
    if let Some(dir) = &a.out {
        let path = out_path(dir, "validate.json")?;
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
    }
    if a.json {
        println!("{json}");
        return Ok(());
    }
    let r = &out.closed_form;
    println!(
        "{} M={} K={} streams={} trials={}",
        r.system, r.antennas, r.devices, r.streams, a.trials
    );
    println!(
        "array gain: empirical {:.4} +- {:.4} (1st stream: {:.4} +- {:.4}), closed form {}, bracket [{}, {}]",
        r.empirical_gain.mean,
        r.empirical_gain.std_err,
        out.array_gain.mean,
        out.array_gain.std_err,
        r.closed_form_gain,
        r.bracket.0,
        r.bracket.1
    );
    println!(
        "bracket check: {}   closed form at a bracket end: {}   max leakage {:.2e}   convention gap {:.4}",
        if r.bracket_ok { "ok" } else { "FAILED" },
        if r.closed_form_in_bracket { "yes" } else { "no" },
        r.max_leakage,
        r.convention_gap
    );
    println!("{:>6} {:<7} {:>12} {:>12} {:>10}", "device", "role", "closed", "empirical", "rel.err");
    for d in &r.devices_checked {
        println!(
            "{:>6} {:<7} {:>12.6} {:>12.6} {:>10.4}",
            d.device, d.role, d.closed_form_rate, d.empirical_rate, d.rel_error
        );
    }
    if !r.bracket_ok {
        return Err(Error::Input("empirical array gain outside the [M-N, M-N+1] bracket".into()));
    }
    Ok(())
}

/// One plotting panel: a set of combinations and the metric columns to emit.
struct Panel {
    file: &'static str,
    combos: &'static [Combo],
    columns: &'static [&'static str],
    ylabel: &'static str,
}

const EPA: &[Combo] = &[Combo::new(System::Mmimo, Policy::Epa), Combo::new(System::Noma, Policy::Epa)];
const PICPA: &[Combo] = &[
    Combo::new(System::Mmimo, Policy::Picpa),
    Combo::new(System::Noma, Policy::Picpa),
];
const WF: &[Combo] = &[Combo::new(System::Mmimo, Policy::Wf), Combo::new(System::Noma, Policy::Dwf)];
const ALL: &[Combo] = &Combo::all();
const SURFACE: &[Combo] = &[
    Combo::new(System::Noma, Policy::Epa),
    Combo::new(System::Mmimo, Policy::Wf),
    Combo::new(System::Noma, Policy::Dwf),
];

const PANELS: &[Panel] = &[
    Panel { file: "se_vs_loading_epa", combos: EPA, columns: &["se_mean", "se_stderr"], ylabel: "avg SE [bits/s/Hz]" },
    Panel { file: "se_vs_loading_picpa", combos: PICPA, columns: &["se_mean", "se_stderr"], ylabel: "avg SE [bits/s/Hz]" },
    Panel { file: "se_vs_loading_wf", combos: WF, columns: &["se_mean", "se_stderr"], ylabel: "avg SE [bits/s/Hz]" },
    Panel { file: "active_devices", combos: ALL, columns: &["active_frac"], ylabel: "active devices [fraction]" },
    Panel { file: "se_surface", combos: SURFACE, columns: &["se_mean"], ylabel: "avg SE [bits/s/Hz]" },
    Panel { file: "fairness_epa", combos: EPA, columns: &["fairness_mean"], ylabel: "Jain index" },
    Panel { file: "fairness_picpa", combos: PICPA, columns: &["fairness_mean"], ylabel: "Jain index" },
    Panel { file: "fairness_wf", combos: WF, columns: &["fairness_mean"], ylabel: "Jain index" },
    Panel { file: "ee_vs_loading_epa", combos: EPA, columns: &["ee_mean"], ylabel: "EE [bits/J/Hz]" },
    Panel { file: "ee_vs_loading_picpa", combos: PICPA, columns: &["ee_mean"], ylabel: "EE [bits/J/Hz]" },
    Panel { file: "ee_vs_loading_wf", combos: WF, columns: &["ee_mean"], ylabel: "EE [bits/J/Hz]" },
    Panel { file: "ee_surface", combos: SURFACE, columns: &["ee_mean"], ylabel: "EE [bits/J/Hz]" },
];

fn column(s: &harness::PointStats, name: &str) -> f64 {
    match name {
        "se_mean" => s.se_mean,
        "se_stderr" => s.se_stderr,
        "ee_mean" => s.ee_mean,
        "fairness_mean" => s.fairness_mean,
        "active_frac" => s.active_frac,
        other => unreachable!("unknown column {other}"),
    }
}

fn plot_data(a: PlotArgs) -> Result<()> {
    let mut results: Vec<SweepResult> = a.inputs.iter().map(|p| read_sweep_csv(p)).collect::<Result<_>>()?;
    results.sort_by_key(|r| r.antennas);
    create_dir(&a.out)?;
    for panel in PANELS {
        let mut header = vec!["M", "rho", "K", "system", "policy"];
        header.extend_from_slice(panel.columns);
        let mut rows = Vec::new();
        for r in &results {
            for &combo in panel.combos {
                for (g, s) in r.series(combo) {
                    let mut row = vec![
                        r.antennas.to_string(),
                        g.rho.to_string(),
                        g.k.to_string(),
                        combo.system.to_string(),
                        combo.policy.to_string(),
                    ];
                    row.extend(panel.columns.iter().map(|c| column(&s, c).to_string()));
                    rows.push(row);
                }
            }
        }
        write_csv(&a.out.join(format!("{}.csv", panel.file)), &header, rows)?;
    }
    if a.gnuplot {
        let path = a.out.join("plots.gp");
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let ms: Vec<usize> = results.iter().map(|r| r.antennas).collect();
        gnuplot_script(&mut f, &ms).map_err(|e| Error::io(&path, e))?;
    }
    println!("wrote {} panel files to {}", PANELS.len(), a.out.display());
    Ok(())
}

fn gnuplot_script(f: &mut impl Write, antennas: &[usize]) -> std::io::Result<()> {
    writeln!(f, "# gnuplot -c plots.gp   (run from this directory)")?;
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set terminal pngcairo size 900,600")?;
    writeln!(f, "set key outside right")?;
    writeln!(f, "set xlabel 'loading rho = K/M'")?;
    for panel in PANELS {
        let surface = panel.file.ends_with("surface");
        writeln!(f, "\nset output '{}.png'", panel.file)?;
        writeln!(f, "set ylabel '{}'", panel.ylabel)?;
        // metric column index: M, rho, K, system, policy come first
        let col = 6;
        if surface {
            writeln!(f, "set ylabel 'M'\nset zlabel '{}'", panel.ylabel)?;
        }
        let mut terms = Vec::new();
        for m in antennas {
            for c in panel.combos {
                let filter = format!(
                    "(stringcolumn(1) eq '{m}' && stringcolumn(4) eq '{}' && stringcolumn(5) eq '{}' ? ${col} : 1/0)",
                    c.system, c.policy
                );
                let using = if surface {
                    format!("2:1:{filter}")
                } else {
                    format!("2:{filter}")
                };
                terms.push(format!(
                    "'{}.csv' skip 1 using {using} with lines title '{} M={m}'",
                    panel.file, c
                ));
            }
        }
        let cmd = if surface { "splot" } else { "plot" };
        writeln!(f, "{cmd} {}", terms.join(", \\\n     "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spec_flags() {
        let cli = Cli::try_parse_from([
            "nomasim", "sweep", "--preset", "paper-m64", "--out", "r", "--seed", "1", "--trials", "5",
            "--pathloss-mode", "paper-db", "--threads", "2",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        let cfg = a.run.resolve().unwrap();
        assert_eq!(cfg.scenario.antennas, 64);
        assert_eq!(cfg.sweep.seed, 1);
        assert_eq!(cfg.sweep.trials, 5);
        assert_eq!(cfg.scenario.pathloss_mode, PathlossMode::PaperDb);
    }

    #[test]
    fn rejects_unknown_flag_and_preset() {
        assert!(Cli::try_parse_from(["nomasim", "sweep", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["nomasim", "sweep", "--preset", "paper-m32"]).is_err());
        assert_ne!(run_command(["nomasim", "frobnicate"]), 0);
    }

    #[test]
    fn config_and_preset_conflict() {
        assert!(Cli::try_parse_from(["nomasim", "sweep", "--preset", "paper-m64", "--config", "x.toml"]).is_err());
    }

    #[test]
    fn unreadable_config_fails() {
        assert_eq!(run_command(["nomasim", "sweep", "--config", "/nonexistent/cfg.toml"]), 1);
    }
}
