//! End-to-end behavior of the `biphoton` binary: exit codes, byte-identical
//! reruns, config validation messages, and external fits.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_biphoton"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn list_experiments_names_all_six() {
    let out = run(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fringe-vs-voltage",
        "hom",
        "polarization-fringe",
        "bsm-phase-sweep",
        "bsm-delay",
        "modulation",
    ] {
        assert!(text.contains(name), "missing `{name}` in:\n{text}");
    }
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let cfg = config_path("hom_w1w2.toml");
    for out in [&out_a, &out_b] {
        let result = run(&[
            "run",
            cfg.to_str().unwrap(),
            "--seed",
            "77",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{result:?}");
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "same config and seed must produce identical bytes");
}

#[test]
fn seed_override_changes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let cfg = config_path("hom_w1w2.toml");
    for (out, seed) in [(&out_a, "1"), (&out_b, "2")] {
        assert!(run(&[
            "run",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ])
        .status
        .success());
    }
    assert_ne!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
}

#[test]
fn csv_header_carries_experiment_seed_version_and_label() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fringe.csv");
    let cfg = config_path("fringe_vs_voltage.toml");
    assert!(run(&[
        "run",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# experiment=fringe-vs-voltage seed=5 version="));
    assert_eq!(lines.next().unwrap(), "# label=fig2a");
    assert_eq!(
        lines.next().unwrap(),
        "sweep_value,coincidences,singles_1,singles_2"
    );
}

#[test]
fn energy_conservation_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = std::fs::read_to_string(config_path("hom_w1w2.toml"))
        .unwrap()
        .replace(
            "pump_wavelength_2_nm = 1549.313137",
            "pump_wavelength_2_nm = 1549.0",
        );
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, cfg_text).unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("pump_wavelength_2_nm") && err.contains("energy conservation"),
        "stderr should name the offending key: {err}"
    );
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text =
        std::fs::read_to_string(config_path("hom_w1w2.toml")).unwrap() + "\n[hom2]\nanswer = 42\n";
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, cfg_text).unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("hom2"), "stderr should name the key: {err}");
}

#[test]
fn fit_matches_run_summary_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("hom.csv");
    let cfg = config_path("hom_w1w2.toml");
    let run_out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(run_out.status.success());
    let run_text = String::from_utf8(run_out.stdout).unwrap();
    let run_fit_line = run_text
        .lines()
        .find(|l| l.starts_with("hom fit:"))
        .expect("run prints a fit line")
        .to_string();

    let fit_out = run(&["fit", out_csv.to_str().unwrap(), "--model", "hom"]);
    assert!(fit_out.status.success());
    let fit_text = String::from_utf8(fit_out.stdout).unwrap();
    assert_eq!(fit_text.trim(), run_fit_line.trim());
}

#[test]
fn fit_on_empty_file_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    let out = run(&["fit", path.to_str().unwrap(), "--model", "fringe"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_reports_line_number_for_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.csv");
    std::fs::write(&path, "delay_ps,coincidences\n1.0,5\nnot-a-number,7\n").unwrap();
    let out = run(&["fit", path.to_str().unwrap(), "--model", "hom"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn fringe_csv_fitted_with_hom_model_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("pol.csv");
    let cfg = config_path("polarization_fringe_h0.toml");
    assert!(run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&["fit", out_csv.to_str().unwrap(), "--model", "hom"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn huge_thermal_time_constant_destroys_the_plateaus() {
    // With a 10 s time constant the phase never settles within a 1 ms period,
    // so the two-plateau structure (and its contrast check) disappears.
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = std::fs::read_to_string(config_path("modulation_1khz.toml"))
        .unwrap()
        .replace("tau_thermal_us = 10.0", "tau_thermal_us = 10000000.0");
    let path = dir.path().join("slow.toml");
    std::fs::write(&path, cfg_text).unwrap();
    let out_csv = dir.path().join("mod.csv");
    let result = run(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    let plateau_line = stdout
        .lines()
        .find(|l| l.starts_with("plateaus:"))
        .expect("summary has plateau line")
        .to_string();
    let ratio: f64 = plateau_line
        .split("ratio=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let expected: f64 = plateau_line
        .split("predicts ")
        .nth(1)
        .unwrap()
        .trim_end_matches(')')
        .parse()
        .unwrap();
    assert!(
        (ratio - expected).abs() > 0.5 * expected,
        "ratio {ratio} should be far from {expected} when the drive never settles"
    );
}

#[test]
fn modulation_run_writes_forty_bins() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("mod.csv");
    let cfg = config_path("modulation_1khz.toml");
    let result = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("bin_index") && !l.is_empty())
        .collect();
    assert_eq!(rows.len(), 40);
    // Two plateaus: the low-half bins sit far below the high-half bins.
    let counts: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let first_half: f64 = counts[4..20].iter().sum::<f64>() / 16.0;
    let second_half: f64 = counts[24..40].iter().sum::<f64>() / 16.0;
    assert!(
        second_half > 5.0 * first_half,
        "expected distinct plateaus, got {first_half} vs {second_half}"
    );
}
