//! Discrete-time closed-loop world and Monte Carlo harness.
//!
//! A step of the closed loop is: every seeker takes a fresh bearing
//! measurement, the estimator re-solves (warm-started from the previous
//! estimate), the controller computes one velocity per seeker from the
//! new estimate, and positions integrate by explicit Euler over one
//! sample period.
//!
//! The Monte Carlo harness repeats the single-shot localization task at
//! fixed seeker positions under independent noise realizations. Trial k
//! draws from a dedicated RNG stream derived from `(seed, k)`, so runs
//! are bit-identical across repetitions and thread counts.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::controller::{self, ControlConfig};
use crate::error::{Error, Result};
use crate::estimator::{self, Estimate, WlsConfig};
use crate::geometry::{self, COINCIDENT_TOL};
use crate::scalar::{real, Real};
use crate::sensing::{MeasurementSet, NoiseModel};

/// Full experiment configuration: scene, noise, timing, control gain,
/// solver tolerance, and Monte Carlo bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    /// True target position (known only to the simulator).
    pub target: Vector3<T>,
    /// Initial seeker positions.
    pub seekers: Vec<Vector3<T>>,
    /// Per-agent noise standard deviation, radians.
    pub sigmas: Vec<T>,
    /// Measurement sampling period, seconds.
    pub sample_period: T,
    /// Closed-loop horizon, seconds.
    pub duration: T,
    /// Control gain; zero keeps the seekers static.
    pub gain: T,
    /// Solver innovation tolerance, meters.
    pub tolerance: T,
    /// Number of Monte Carlo trials.
    pub trials: usize,
    /// Base RNG seed.
    pub seed: u64,
}

/// One-degree noise standard deviation, the reference value used by the
/// shipped scenarios.
fn one_degree<T: Real>() -> T {
    T::pi() / real(180.0)
}

impl<T: Real> Scenario<T> {
    fn reference(seekers: Vec<Vector3<T>>) -> Self {
        let n = seekers.len();
        Self {
            target: Vector3::zeros(),
            seekers,
            sigmas: vec![one_degree(); n],
            sample_period: real(0.1),
            duration: real(20.0),
            gain: real(0.002),
            tolerance: real(1e-4),
            trials: 1000,
            seed: 1,
        }
    }

    /// Clustered three-seeker configuration: all agents west of the
    /// target, nearly collinear bearings.
    pub fn clustered() -> Self {
        Self::reference(vec![
            Vector3::new(real(-15.0), T::zero(), T::zero()),
            Vector3::new(real(-15.0), real(3.0), T::zero()),
            Vector3::new(real(-15.0), T::zero(), T::one()),
        ])
    }

    /// Spaced configuration: one agent moved to the north axis.
    pub fn spaced() -> Self {
        Self::reference(vec![
            Vector3::new(T::zero(), real(15.0), T::zero()),
            Vector3::new(real(-15.0), real(3.0), T::zero()),
            Vector3::new(real(-15.0), T::zero(), T::one()),
        ])
    }

    /// Well-spaced configuration: bearings close to mutually orthogonal.
    pub fn well_spaced() -> Self {
        Self::reference(vec![
            Vector3::new(T::zero(), real(15.0), T::zero()),
            Vector3::new(real(-15.0), real(3.0), T::zero()),
            Vector3::new(T::zero(), T::zero(), real(15.0)),
        ])
    }

    pub fn n(&self) -> usize {
        self.seekers.len()
    }

    /// Checks every structural invariant of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.seekers.len() < 2 {
            return Err(Error::InsufficientAgents { required: 2, actual: self.seekers.len() });
        }
        if self.sigmas.len() != self.seekers.len() {
            return Err(Error::DimensionMismatch {
                what: "sigmas vs seekers",
                expected: self.seekers.len(),
                actual: self.sigmas.len(),
            });
        }
        if self.sigmas.iter().any(|s| *s <= T::zero() || !s.is_finite()) {
            return Err(Error::InvalidParameter { name: "sigma", reason: "must be positive" });
        }
        if self.sample_period <= T::zero() || !self.sample_period.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sample_period",
                reason: "must be positive",
            });
        }
        if self.duration < T::zero() || !self.duration.is_finite() {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: "must be nonnegative",
            });
        }
        if self.gain < T::zero() || !self.gain.is_finite() {
            return Err(Error::InvalidParameter { name: "gain", reason: "must be nonnegative" });
        }
        if self.tolerance <= T::zero() || !self.tolerance.is_finite() {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive" });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter { name: "trials", reason: "must be at least 1" });
        }
        for (i, s) in self.seekers.iter().enumerate() {
            if (s - self.target).norm() < real(COINCIDENT_TOL) {
                return Err(Error::CoincidentPoints { seeker: Some(i) });
            }
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel<T>> {
        NoiseModel::per_agent(self.sigmas.clone())
    }

    /// WLS configuration induced by the scenario: inverse-covariance
    /// weight and the scenario tolerance.
    pub fn wls_config(&self) -> Result<WlsConfig<T>> {
        WlsConfig::from_noise_model(
            self.tolerance,
            WlsConfig::<T>::DEFAULT_MAX_ITERATIONS,
            &self.noise_model()?,
        )
    }

    /// Number of logged sample instants of a closed-loop episode,
    /// `floor(duration / period) + 1`.
    pub fn episode_samples(&self) -> usize {
        let ratio = self.duration / self.sample_period;
        let nudged = ratio + real(1e-9);
        nudged.floor().to_usize().unwrap_or(0) + 1
    }
}

/// Snapshot of the closed-loop world at one sample instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T: Real> {
    pub time: T,
    pub seekers: Vec<Vector3<T>>,
    pub current_estimate: Option<Estimate<T>>,
}

impl<T: Real> WorldState<T> {
    /// World at time zero: initial positions, no estimate yet.
    pub fn initial(scenario: &Scenario<T>) -> Self {
        Self { time: T::zero(), seekers: scenario.seekers.clone(), current_estimate: None }
    }
}

/// One logged instant of a closed-loop episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSample<T: Real> {
    pub time: T,
    /// Seeker positions at this instant (before integrating onward).
    pub seekers: Vec<Vector3<T>>,
    /// Velocities applied over the following sample period.
    pub velocities: Vec<Vector3<T>>,
    pub estimate: Estimate<T>,
    /// Reward evaluated at the current estimate.
    pub reward_est: T,
    /// Reward evaluated at the true target (simulator-only diagnostic).
    pub reward_true: T,
    /// Condition number of the estimate covariance.
    pub condition_number: T,
}

/// Result of a single Monte Carlo localization trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult<T: Real> {
    pub estimate: Estimate<T>,
    pub iterations: usize,
}

/// Aggregate statistics of a Monte Carlo batch.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary<T: Real> {
    pub trials: usize,
    pub failed_trials: usize,
    pub empirical_mean: Vector3<T>,
    pub empirical_cov: Matrix3<T>,
    pub theoretical_cov: Matrix3<T>,
    pub iteration_histogram: BTreeMap<usize, usize>,
    pub theta_m: T,
    pub reward_value: T,
    pub condition_number: T,
}

/// A Monte Carlo batch: per-trial outcomes in trial order plus the
/// aggregate summary.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun<T: Real> {
    pub summary: McSummary<T>,
    pub outcomes: Vec<Result<TrialResult<T>>>,
}

/// Advances the world by one sample period: measure, estimate (warm
/// start when the previous estimate converged), control, integrate.
pub fn step<T: Real, R: Rng>(
    state: &WorldState<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<WorldState<T>>
where
    StandardNormal: Distribution<T>,
{
    let index = (state.time / scenario.sample_period)
        .round()
        .to_usize()
        .unwrap_or(0);
    let (next, _) = advance(state, scenario, rng, index)?;
    Ok(next)
}

/// Runs the closed loop over the scenario horizon, logging one sample
/// per instant `t = kT` including `t = 0`.
pub fn run_episode<T: Real, R: Rng>(
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<Vec<EpisodeSample<T>>>
where
    StandardNormal: Distribution<T>,
{
    scenario.validate()?;
    let model = scenario.noise_model()?;
    let samples = scenario.episode_samples();
    let mut out = Vec::with_capacity(samples);
    let mut state = WorldState::initial(scenario);
    for k in 0..samples {
        let (next, record) = advance(&state, scenario, rng, k)?;
        let estimate = record.estimate;
        let reward_est = controller::reward(&estimate.position, &state.seekers, &model)
            .map_err(|e| step_error(k, e))?;
        let reward_true = controller::reward(&scenario.target, &state.seekers, &model)
            .map_err(|e| step_error(k, e))?;
        let condition_number =
            condition_number(&estimate.covariance).map_err(|e| step_error(k, e))?;
        out.push(EpisodeSample {
            time: state.time,
            seekers: state.seekers.clone(),
            velocities: record.velocities,
            estimate,
            reward_est,
            reward_true,
            condition_number,
        });
        state = next;
    }
    Ok(out)
}

struct StepRecord<T: Real> {
    velocities: Vec<Vector3<T>>,
    estimate: Estimate<T>,
}

fn advance<T: Real, R: Rng>(
    state: &WorldState<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
    index: usize,
) -> Result<(WorldState<T>, StepRecord<T>)>
where
    StandardNormal: Distribution<T>,
{
    scenario.validate().map_err(|e| step_error(index, e))?;
    let model = scenario.noise_model().map_err(|e| step_error(index, e))?;
    let config = scenario.wls_config().map_err(|e| step_error(index, e))?;

    let measurements =
        MeasurementSet::sample(&state.seekers, &scenario.target, &model, state.time, rng)
            .map_err(|e| step_error(index, e))?;
    let initial = match state.current_estimate.as_ref().and_then(estimator::warm_start) {
        Some(p) => p,
        None => estimator::initialize(&measurements).map_err(|e| step_error(index, e))?,
    };
    let estimate =
        estimator::wls_solve(&initial, &measurements, &config).map_err(|e| step_error(index, e))?;

    let velocities = if scenario.gain > T::zero() {
        let control = ControlConfig::new(scenario.gain).map_err(|e| step_error(index, e))?;
        let mut v = Vec::with_capacity(state.seekers.len());
        for i in 0..state.seekers.len() {
            let u = controller::control_input(
                &estimate.position,
                &state.seekers,
                &model,
                i,
                &control,
            )
            .map_err(|e| step_error(index, e))?;
            v.push(u.velocity);
        }
        v
    } else {
        vec![Vector3::zeros(); state.seekers.len()]
    };

    let seekers: Vec<Vector3<T>> = state
        .seekers
        .iter()
        .zip(&velocities)
        .map(|(p, u)| p + u * scenario.sample_period)
        .collect();
    // k·T rather than repeated addition, so logged times do not drift
    let next = WorldState {
        time: scenario.sample_period * real::<T>((index + 1) as f64),
        seekers,
        current_estimate: Some(estimate.clone()),
    };
    Ok((next, StepRecord { velocities, estimate }))
}

fn step_error(step: usize, source: Error) -> Error {
    Error::StepFailed { step, source: Box::new(source) }
}

/// One Monte Carlo localization trial: fresh measurements at the
/// scenario's initial positions, cold-start initialization, WLS solve.
/// Trial `k` uses RNG stream `k` of the scenario seed.
pub fn mc_trial<T: Real>(scenario: &Scenario<T>, trial: usize) -> Result<TrialResult<T>>
where
    StandardNormal: Distribution<T>,
{
    let model = scenario.noise_model()?;
    let config = scenario.wls_config()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(trial as u64);
    let measurements =
        MeasurementSet::sample(&scenario.seekers, &scenario.target, &model, T::zero(), &mut rng)?;
    let initial = estimator::initialize(&measurements)?;
    let estimate = estimator::wls_solve(&initial, &measurements, &config)?;
    let iterations = estimate.iterations;
    Ok(TrialResult { estimate, iterations })
}

/// Runs the Monte Carlo batch. Trials are independent and scheduled on
/// the current rayon pool; per-trial seeding and index-ordered
/// aggregation make the output identical for any worker count. Fails
/// only when more than 1% of trials fail.
pub fn monte_carlo<T: Real + Send + Sync>(scenario: &Scenario<T>) -> Result<McRun<T>>
where
    StandardNormal: Distribution<T>,
{
    scenario.validate()?;
    if scenario.trials < 2 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "Monte Carlo needs at least 2 trials",
        });
    }
    let outcomes: Vec<Result<TrialResult<T>>> =
        (0..scenario.trials).into_par_iter().map(|k| mc_trial(scenario, k)).collect();
    summarize(scenario, outcomes)
}

fn summarize<T: Real>(
    scenario: &Scenario<T>,
    outcomes: Vec<Result<TrialResult<T>>>,
) -> Result<McRun<T>> {
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed * 100 > scenario.trials {
        return Err(Error::TooManyTrialFailures { failed, trials: scenario.trials });
    }
    let successes: Vec<&TrialResult<T>> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let count = real::<T>(successes.len() as f64);

    let mut mean = Vector3::zeros();
    for t in &successes {
        mean += t.estimate.position;
    }
    mean /= count;

    let mut cov = Matrix3::zeros();
    for t in &successes {
        let d = t.estimate.position - mean;
        cov += d * d.transpose();
    }
    cov /= count - T::one();

    let mut histogram = BTreeMap::new();
    for t in &successes {
        *histogram.entry(t.iterations).or_insert(0) += 1;
    }

    let model = scenario.noise_model()?;
    let theoretical_cov =
        estimator::theoretical_covariance(&scenario.target, &scenario.seekers, &model)?;
    let summary = McSummary {
        trials: scenario.trials,
        failed_trials: failed,
        empirical_mean: mean,
        empirical_cov: cov,
        theoretical_cov,
        iteration_histogram: histogram,
        theta_m: closeness(&scenario.seekers, &scenario.target)?,
        reward_value: controller::reward(&scenario.target, &scenario.seekers, &model)?,
        condition_number: condition_number(&theoretical_cov)?,
    };
    Ok(McRun { summary, outcomes })
}

/// Mean pairwise bearing angle of the seeker group as seen from the
/// target: the average over unordered pairs of `arcsin(‖b_i × b_j‖)`.
/// Small values mean the seekers are clustered.
pub fn closeness<T: Real>(seekers: &[Vector3<T>], target: &Vector3<T>) -> Result<T> {
    let n = seekers.len();
    if n < 2 {
        return Err(Error::InsufficientAgents { required: 2, actual: n });
    }
    let mut bearings = Vec::with_capacity(n);
    for (i, s) in seekers.iter().enumerate() {
        let b = geometry::bearing(s, target)
            .map_err(|_| Error::CoincidentPoints { seeker: Some(i) })?;
        bearings.push(b.vector());
    }
    let mut acc = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = bearings[i].cross(&bearings[j]).norm();
            acc += s.min(T::one()).asin();
        }
    }
    let pairs = real::<T>((n * (n - 1) / 2) as f64);
    Ok(acc / pairs)
}

/// Ratio of extreme eigenvalues of a symmetric positive definite matrix.
pub fn condition_number<T: Real>(m: &Matrix3<T>) -> Result<T> {
    let eigs = m.symmetric_eigen().eigenvalues;
    let (lo, hi) = (eigs.min(), eigs.max());
    if lo <= T::zero() {
        return Err(Error::Singular);
    }
    Ok(hi / lo)
}
