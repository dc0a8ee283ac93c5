//! Bearing-only target localization toolkit.
//!
//! A group of seeker agents measures noisy bearings (unit vectors on S²)
//! toward a static target. This crate provides:
//!
//! - [`geometry`]: sphere and projector primitives (bearings, tangent
//!   spaces, exponential map, stacked bearing-rigidity Jacobian);
//! - [`sensing`]: synthesis of noisy bearing measurements and their
//!   additive-noise decomposition;
//! - [`estimator`]: closed-form initialization and iterative weighted
//!   least-squares solution of the target position, with covariance;
//! - [`controller`]: active-sensing control law steering the seekers to
//!   maximize a D-optimality reward on the estimate covariance;
//! - [`simulator`]: discrete-time closed loop (measure → estimate →
//!   control → integrate) plus a seeded Monte Carlo harness.
//!
//! All numerical routines are generic over the scalar type through
//! [`Real`]; the crate root exposes `f64` aliases for the common case.

pub mod controller;
mod error;
pub mod estimator;
pub mod geometry;
mod scalar;
pub mod sensing;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision position / direction vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Double-precision 3×3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;

pub type UnitBearing = geometry::UnitBearing<f64>;
pub type TangentVector = geometry::TangentVector<f64>;
pub type StackedJacobian = geometry::StackedJacobian<f64>;
pub type NoiseModel = sensing::NoiseModel<f64>;
pub type MeasurementSet = sensing::MeasurementSet<f64>;
pub type WlsConfig = estimator::WlsConfig<f64>;
pub type Estimate = estimator::Estimate<f64>;
pub type ControlConfig = controller::ControlConfig<f64>;
pub type ControlOutput = controller::ControlOutput<f64>;
pub type Scenario = simulator::Scenario<f64>;
pub type WorldState = simulator::WorldState<f64>;
pub type EpisodeSample = simulator::EpisodeSample<f64>;
pub type TrialResult = simulator::TrialResult<f64>;
pub type McSummary = simulator::McSummary<f64>;
pub type McRun = simulator::McRun<f64>;
