//! End-to-end tests of the `bearloc` binary: exit codes, file formats,
//! and the documented behavior of each subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bearloc")).args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const WELL_SPACED: &str = r#"{
    "target": [0.0, 0.0, 0.0],
    "seekers": [[0.0, 15.0, 0.0], [-15.0, 3.0, 0.0], [0.0, 0.0, 15.0]],
    "sigma_deg": 1.0,
    "sample_period_s": 0.1,
    "duration_s": 15.0,
    "gain": 0.002,
    "tolerance_m": 1e-4,
    "trials": 1000,
    "seed": 1
}"#;

#[test]
fn estimate_synthesized_converges_near_target() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "estimate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--synthesize",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("estimate.json")).unwrap())
            .unwrap();
    assert_eq!(record["converged"], serde_json::Value::Bool(true));
    let p: Vec<f64> =
        record["position"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    assert!(norm < 0.5, "estimate {norm} m from target");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], serde_json::json!(1));
    assert_eq!(manifest["scenario_digest"].as_str().unwrap().len(), 64);
    assert!(manifest["command_line"].as_str().unwrap().contains("estimate"));
}

#[test]
fn estimate_requires_a_measurement_source() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let out = run(&[
        "estimate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn estimate_rejects_single_agent_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let measurements = tmp.path().join("m.csv");
    std::fs::write(&measurements, "agent,px,py,pz,bx,by,bz\n0,-15,0,0,1,0,0\n").unwrap();
    let out = run(&[
        "estimate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--measurements",
        measurements.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n >= 2 required"));
}

#[test]
fn estimate_exits_three_on_collinear_bearings() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let measurements = tmp.path().join("m.csv");
    std::fs::write(
        &measurements,
        "agent,px,py,pz,bx,by,bz\n0,-15,0,0,1,0,0\n1,-30,0,0,1,0,0\n",
    )
    .unwrap();
    let out = run(&[
        "estimate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--measurements",
        measurements.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("collinear"));
}

#[test]
fn estimate_reads_measurement_file_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    // noiseless bearings from two seekers toward (1, 2, 0)
    let measurements = tmp.path().join("m.csv");
    let b0 = [1.0f64 - -15.0, 2.0, 0.0];
    let n0 = (b0[0] * b0[0] + b0[1] * b0[1]).sqrt();
    let b1 = [1.0f64, 2.0 - 15.0, 0.0];
    let n1 = (b1[0] * b1[0] + b1[1] * b1[1]).sqrt();
    std::fs::write(
        &measurements,
        format!(
            "agent,px,py,pz,bx,by,bz\n0,-15,0,0,{},{},0\n1,0,15,0,{},{},0\n",
            b0[0] / n0,
            b0[1] / n0,
            b1[0] / n1,
            b1[1] / n1
        ),
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "estimate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--measurements",
        measurements.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("estimate.json")).unwrap())
            .unwrap();
    let p: Vec<f64> =
        record["position"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 2.0).abs() < 1e-6 && p[2].abs() < 1e-6);
}

#[test]
fn seed_override_changes_synthesized_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let mut estimates = Vec::new();
    for (dir, seed) in [("a", "1"), ("b", "9")] {
        let out_dir = tmp.path().join(dir);
        let out = run(&[
            "estimate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--synthesize",
            "--seed",
            seed,
        ]);
        assert_eq!(exit_code(&out), 0);
        estimates.push(std::fs::read_to_string(out_dir.join("estimate.json")).unwrap());
    }
    assert_ne!(estimates[0], estimates[1]);
}

#[test]
fn mc_minimal_batch_writes_valid_files() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        tmp.path(),
        "s.json",
        &WELL_SPACED.replacen("\"trials\": 1000", "\"trials\": 2", 1),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "mc",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["trials"], serde_json::json!(2));
    // empirical covariance must be symmetric positive semi-definite;
    // for a 2-trial batch it is rank one, so check diagonal and symmetry
    let cov = summary["empirical_cov"].as_array().unwrap();
    for i in 0..3 {
        let cii = cov[i].as_array().unwrap()[i].as_f64().unwrap();
        assert!(cii >= 0.0);
        for j in 0..3 {
            let cij = cov[i].as_array().unwrap()[j].as_f64().unwrap();
            let cji = cov[j].as_array().unwrap()[i].as_f64().unwrap();
            assert!((cij - cji).abs() < 1e-15);
        }
    }
    let trials = std::fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3); // header + 2 trials
    assert!(trials.starts_with("trial,px,py,pz,iterations,converged\n"));
}

#[test]
fn mc_histogram_stays_within_four_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        tmp.path(),
        "s.json",
        &WELL_SPACED
            .replacen("[[0.0, 15.0, 0.0], [-15.0, 3.0, 0.0], [0.0, 0.0, 15.0]]",
                      "[[-15.0, 0.0, 0.0], [-15.0, 3.0, 0.0], [-15.0, 0.0, 1.0]]", 1),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "mc",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let hist = std::fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    let max_bucket = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse::<usize>().unwrap())
        .max()
        .unwrap();
    assert!(max_bucket <= 4, "histogram:\n{hist}");
}

#[test]
fn control_fifteen_seconds_gives_151_samples_per_agent() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", WELL_SPACED);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "control",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ts = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    let mut per_agent = [0usize; 3];
    for line in ts.lines().skip(1) {
        let agent: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        per_agent[agent] += 1;
    }
    assert_eq!(per_agent, [151, 151, 151]);
    assert!(out_dir.join("final.json").exists());
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn control_zero_gain_keeps_true_reward_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        tmp.path(),
        "s.json",
        &WELL_SPACED
            .replacen("\"gain\": 0.002", "\"gain\": 0.0", 1)
            .replacen("\"duration_s\": 15.0", "\"duration_s\": 2.0", 1),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "control",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let ts = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    let rewards: Vec<f64> = ts
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(9).unwrap().parse().unwrap())
        .collect();
    let first = rewards[0];
    for r in rewards {
        assert!((r - first).abs() <= 1e-9 * first);
    }
    // velocities are exactly zero in every row
    for line in ts.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(&fields[5..8], &["0", "0", "0"]);
    }
}

#[test]
fn control_requires_positive_duration() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        tmp.path(),
        "s.json",
        &WELL_SPACED.replacen("\"duration_s\": 15.0", "\"duration_s\": 0.0", 1),
    );
    let out = run(&[
        "control",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn malformed_scenario_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "s.json", "{ not json");
    for cmd in ["estimate", "mc", "control"] {
        let out = run(&[
            cmd,
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            tmp.path().join("out").to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 2, "{cmd}");
    }
}

#[test]
fn missing_scenario_field_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario =
        write_scenario(tmp.path(), "s.json", &WELL_SPACED.replacen("\"gain\": 0.002,", "", 1));
    let out = run(&[
        "mc",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gain"));
}
