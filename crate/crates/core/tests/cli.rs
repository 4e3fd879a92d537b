use std::path::Path;

use approx::assert_relative_eq;
use noma_mimo_sim::cli::run_command;
use noma_mimo_sim::harness::{read_summary, RunManifest};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["nomasim"];
    argv.extend_from_slice(args);
    run_command(argv)
}

fn small_config(dir: &Path, antennas: usize) -> String {
    let path = dir.join(format!("m{antennas}.toml"));
    std::fs::write(
        &path,
        format!("[scenario]\nantennas = {antennas}\n\n[sweep]\ntrials = 25\nseed = 5\n"),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn sweep_into(dir: &Path, antennas: usize, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let cfg = small_config(dir, antennas);
    assert_eq!(run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    out
}

#[test]
fn sweep_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep_into(dir.path(), 8, "r");
    for f in ["sweep.csv", "summary.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rho,K,system,policy,se_mean,se_stderr,ee_mean,fairness_mean,active_frac,sic_violation_rate"
    );
    // 8 grid points x 6 combinations
    assert_eq!(lines.count(), 48);
    // NOMA at K = 2M has no closed form
    assert!(csv.contains("2,16,noma,epa,,,,,,\n"));
    let summary = read_summary(&out.join("summary.json")).unwrap();
    assert_eq!(summary.schema_version, 1);
    assert_eq!(summary.areas.len(), 6);
    let meta = summary.metadata.unwrap();
    assert_eq!((meta.seed, meta.trials), (5, 25));
    assert_eq!(meta.pathloss_mode, "normalized-reference");
    assert!(meta.paired_drops);
}

#[test]
fn areas_round_trip_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep_into(dir.path(), 16, "r");
    let csv = out.join("sweep.csv");
    assert_eq!(run(&["areas", "--in", csv.to_str().unwrap()]), 0);
    let summary = read_summary(&out.join("summary.json")).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("areas.csv")).unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let a = summary
            .areas
            .iter()
            .find(|a| a.system.as_str() == &rec[0] && a.policy.as_str() == &rec[1])
            .unwrap();
        assert_eq!(&rec[2], "16");
        assert_relative_eq!(rec[3].parse::<f64>().unwrap(), a.se_area, max_relative = 1e-12);
        assert_relative_eq!(rec[4].parse::<f64>().unwrap(), a.ee_area, max_relative = 1e-12);
        n += 1;
    }
    assert_eq!(n, 6);
    assert!(out.join("ratios.csv").is_file());
}

#[test]
fn manifest_replay_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let first = sweep_into(dir.path(), 8, "a");
    let manifest_path = first.join("manifest.json");
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.command, "sweep");
    assert_eq!(manifest.resolved_config.scenario.antennas, 8);
    assert_eq!(manifest.resolved_config.sweep.trials, 25);

    let second = dir.path().join("b");
    assert_eq!(
        run(&["sweep", "--config", manifest_path.to_str().unwrap(), "--out", second.to_str().unwrap()]),
        0
    );
    for f in ["sweep.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f} differs on replay"
        );
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 4);
    let out = dir.path().join("o");
    let code = run(&[
        "sweep", "--config", &cfg, "--seed", "9", "--trials", "3", "--pathloss-mode", "paper-db", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let meta = read_summary(&out.join("summary.json")).unwrap().metadata.unwrap();
    assert_eq!((meta.seed, meta.trials), (9, 3));
    assert_eq!(meta.pathloss_mode, "paper-db");
}

#[test]
fn tradeoff_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep_into(dir.path(), 16, "r");
    let csv = out.join("sweep.csv");
    assert_eq!(run(&["tradeoff", "--in", csv.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(out.join("tradeoff.csv")).unwrap();
    assert!(text.starts_with("criterion,system,policy,M,rho,K,se,ee,active_frac,fairness\n"));
    assert_eq!(text.lines().count(), 1 + 12);

    assert_eq!(
        run(&["tradeoff", "--in", csv.to_str().unwrap(), "--criterion", "norm-product"]),
        0
    );
    let text = std::fs::read_to_string(out.join("tradeoff.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("norm-product,")));
}

#[test]
fn validate_reports_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let code = run(&[
        "validate", "--m", "16", "--k", "8", "--system", "noma", "--trials", "2000", "--json", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("validate.json")).unwrap()).unwrap();
    let cf = &report["closed_form"];
    assert_eq!(cf["streams"], 4);
    assert_eq!(cf["bracket_ok"], true);
    assert_eq!(cf["closed_form_in_bracket"], true);
    assert_eq!(cf["closed_form_gain"], 13.0);

    assert_eq!(
        run(&["validate", "--m", "32", "--k", "8", "--system", "mmimo", "--unit-gains", "--trials", "500"]),
        0
    );
}

#[test]
fn invalid_parameters_fail() {
    assert_ne!(run(&["validate", "--system", "noma", "--policy", "wf", "--trials", "100"]), 0);
    assert_ne!(run(&["validate", "--m", "4", "--k", "8", "--system", "mmimo", "--trials", "100"]), 0);
    assert_ne!(run(&["sweep", "--trials", "0", "--out", "/nonexistent-dir/x"]), 0);
    assert_ne!(run(&["areas", "--in", "/nonexistent/sweep.csv"]), 0);
    assert_ne!(run(&["sweep", "--threads", "0"]), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nantenas = 4\n").unwrap();
    assert_ne!(run(&["sweep", "--config", bad.to_str().unwrap()]), 0);
}

#[test]
fn plot_data_panels() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_into(dir.path(), 4, "m4").join("sweep.csv");
    let b = sweep_into(dir.path(), 8, "m8").join("sweep.csv");
    let out = dir.path().join("plots");
    let code = run(&[
        "plot-data", "--in", a.to_str().unwrap(), "--in", b.to_str().unwrap(), "--out",
        out.to_str().unwrap(), "--gnuplot",
    ]);
    assert_eq!(code, 0);
    let csvs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 12);
    let se = std::fs::read_to_string(out.join("se_vs_loading_epa.csv")).unwrap();
    assert!(se.starts_with("M,rho,K,system,policy,se_mean,se_stderr\n"));
    // 4 + 8 mMIMO points, 3 + 7 NOMA points
    assert_eq!(se.lines().count(), 1 + 12 + 10);
    let active = std::fs::read_to_string(out.join("active_devices.csv")).unwrap();
    assert!(active.lines().skip(1).all(|l| {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        (0.0..=1.0).contains(&v)
    }));
    let script = std::fs::read_to_string(out.join("plots.gp")).unwrap();
    assert!(script.contains("se_surface.csv") && script.contains("splot"));
}
