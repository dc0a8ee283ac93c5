//! Scenario file schema and canonical digest.
//!
//! Scenarios are single JSON documents. Angles are given in degrees in
//! the file (`sigma_deg`) and converted to radians internally; all other
//! quantities are SI. `sigma_deg` accepts either one number applied to
//! every seeker or one value per seeker.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use bearloc::Scenario;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub target: [f64; 3],
    pub seekers: Vec<[f64; 3]>,
    pub sigma_deg: SigmaSpec,
    pub sample_period_s: f64,
    pub duration_s: f64,
    pub gain: f64,
    pub tolerance_m: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read scenario file {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| format!("invalid scenario file {}: {e}", path.display()))
    }

    /// Converts to the validated core scenario; `seed_override` replaces
    /// the file seed when given.
    pub fn to_scenario(&self, seed_override: Option<u64>) -> Result<Scenario, String> {
        let n = self.seekers.len();
        let sigmas_deg = match &self.sigma_deg {
            SigmaSpec::Uniform(s) => vec![*s; n],
            SigmaSpec::PerAgent(v) => v.clone(),
        };
        let scenario = Scenario {
            target: self.target.into(),
            seekers: self.seekers.iter().map(|p| (*p).into()).collect(),
            sigmas: sigmas_deg.iter().map(|d| d.to_radians()).collect(),
            sample_period: self.sample_period_s,
            duration: self.duration_s,
            gain: self.gain,
            tolerance: self.tolerance_m,
            trials: self.trials,
            seed: seed_override.unwrap_or(self.seed),
        };
        scenario.validate().map_err(|e| format!("invalid scenario: {e}"))?;
        Ok(scenario)
    }

    /// Per-agent noise standard deviations (radians) for an arbitrary
    /// agent count, used when a measurement file brings its own n.
    pub fn sigmas_for(&self, n: usize) -> Result<Vec<f64>, String> {
        match &self.sigma_deg {
            SigmaSpec::Uniform(s) => Ok(vec![s.to_radians(); n]),
            SigmaSpec::PerAgent(v) if v.len() == n => {
                Ok(v.iter().map(|d| d.to_radians()).collect())
            }
            SigmaSpec::PerAgent(v) => Err(format!(
                "sigma_deg lists {} agents but the measurement file has {n}",
                v.len()
            )),
        }
    }
}

/// Stable hex digest of a canonicalized scenario; identical scenarios
/// (after seed override) produce identical digests.
pub fn scenario_digest(s: &Scenario) -> String {
    let mut canon = String::new();
    let fmt_v = |v: &bearloc::Vec3| format!("{},{},{}", v.x, v.y, v.z);
    write!(canon, "target={};seekers=", fmt_v(&s.target)).unwrap();
    for (i, p) in s.seekers.iter().enumerate() {
        if i > 0 {
            canon.push('|');
        }
        canon.push_str(&fmt_v(p));
    }
    write!(canon, ";sigmas=").unwrap();
    for (i, sg) in s.sigmas.iter().enumerate() {
        if i > 0 {
            canon.push(',');
        }
        write!(canon, "{sg}").unwrap();
    }
    write!(
        canon,
        ";sample_period={};duration={};gain={};tolerance={};trials={};seed={}",
        s.sample_period, s.duration, s.gain, s.tolerance, s.trials, s.seed
    )
    .unwrap();
    hex::encode(Sha256::digest(canon.as_bytes()))
}
