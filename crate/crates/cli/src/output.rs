//! Result emission: JSON records and plot-ready CSV files.
//!
//! Every numeric value is written with the shortest representation that
//! parses back to the identical float, so repeated runs with the same
//! scenario and seed produce byte-identical bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use bearloc::{Estimate, EpisodeSample, Mat3, McRun, Vec3};

#[derive(Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub command_line: String,
}

#[derive(Serialize)]
pub struct EstimateRecord {
    pub position: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    pub iterations: usize,
    pub converged: bool,
}

impl EstimateRecord {
    pub fn from_estimate(e: &Estimate) -> Self {
        Self {
            position: vec3_array(&e.position),
            covariance: mat3_array(&e.covariance),
            iterations: e.iterations,
            converged: e.converged,
        }
    }
}

#[derive(Serialize)]
pub struct McSummaryRecord {
    pub trials: usize,
    pub failed_trials: usize,
    pub empirical_mean: [f64; 3],
    pub empirical_cov: [[f64; 3]; 3],
    pub theoretical_cov: [[f64; 3]; 3],
    /// `[iterations, count]` pairs in ascending iteration order.
    pub iteration_histogram: Vec<[usize; 2]>,
    pub theta_m: f64,
    pub reward_value: f64,
    pub condition_number: f64,
}

#[derive(Serialize)]
pub struct FinalRecord {
    pub time: f64,
    pub estimate: EstimateRecord,
    pub reward_est: f64,
    pub reward_true: f64,
    pub condition_number: f64,
    pub seekers: Vec<[f64; 3]>,
}

pub fn vec3_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn mat3_array(m: &Mat3) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("cannot serialize {}: {e}", path.display()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn mc_summary_record(run: &McRun) -> McSummaryRecord {
    let s = &run.summary;
    McSummaryRecord {
        trials: s.trials,
        failed_trials: s.failed_trials,
        empirical_mean: vec3_array(&s.empirical_mean),
        empirical_cov: mat3_array(&s.empirical_cov),
        theoretical_cov: mat3_array(&s.theoretical_cov),
        iteration_histogram: s.iteration_histogram.iter().map(|(k, v)| [*k, *v]).collect(),
        theta_m: s.theta_m,
        reward_value: s.reward_value,
        condition_number: s.condition_number,
    }
}

pub fn write_trials_csv(path: &Path, run: &McRun) -> Result<(), String> {
    let mut out = String::from("trial,px,py,pz,iterations,converged\n");
    for (k, outcome) in run.outcomes.iter().enumerate() {
        if let Ok(trial) = outcome {
            let p = &trial.estimate.position;
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                p.x, p.y, p.z, trial.iterations, trial.estimate.converged
            )
            .unwrap();
        }
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn write_histogram_csv(path: &Path, run: &McRun) -> Result<(), String> {
    let mut out = String::from("iterations,count\n");
    for (iterations, count) in &run.summary.iteration_histogram {
        writeln!(out, "{iterations},{count}").unwrap();
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn write_timeseries_csv(path: &Path, series: &[EpisodeSample]) -> Result<(), String> {
    let mut out = String::from(
        "t,agent,px,py,pz,ux,uy,uz,reward_est,reward_true,cond_number,est_x,est_y,est_z\n",
    );
    for sample in series {
        for (i, (p, u)) in sample.seekers.iter().zip(&sample.velocities).enumerate() {
            let e = &sample.estimate.position;
            writeln!(
                out,
                "{},{i},{},{},{},{},{},{},{},{},{},{},{},{}",
                sample.time,
                p.x,
                p.y,
                p.z,
                u.x,
                u.y,
                u.z,
                sample.reward_est,
                sample.reward_true,
                sample.condition_number,
                e.x,
                e.y,
                e.z
            )
            .unwrap();
        }
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn final_record(series: &[EpisodeSample]) -> Option<FinalRecord> {
    let last = series.last()?;
    Some(FinalRecord {
        time: last.time,
        estimate: EstimateRecord::from_estimate(&last.estimate),
        reward_est: last.reward_est,
        reward_true: last.reward_true,
        condition_number: last.condition_number,
        seekers: last.seekers.iter().map(vec3_array).collect(),
    })
}
