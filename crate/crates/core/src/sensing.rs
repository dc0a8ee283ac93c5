//! Synthesis of noisy bearing measurements.
//!
//! Each seeker's measurement is the true bearing perturbed in its tangent
//! plane by a Gaussian vector and mapped back onto the sphere. The same
//! perturbation admits an exact additive decomposition `b̃ = b + n`,
//! which is what the weighted least-squares estimator consumes.

use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{self, TangentVector, UnitBearing};
use crate::scalar::{real, Real};

/// Per-agent isotropic noise scale: `sigma[i]` is the standard deviation,
/// in radians, of each ambient axis of the Gaussian perturbation of
/// seeker i. The realized tangent covariance is `σ_i² P(b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T: Real> {
    sigmas: Vec<T>,
}

impl<T: Real> NoiseModel<T> {
    /// Builds a model from per-agent standard deviations (radians).
    pub fn per_agent(sigmas: Vec<T>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidParameter { name: "sigma", reason: "needs at least one agent" });
        }
        if sigmas.iter().any(|s| *s <= T::zero()) {
            return Err(Error::InvalidParameter { name: "sigma", reason: "must be positive" });
        }
        Ok(Self { sigmas })
    }

    /// Same standard deviation for all `n` agents.
    pub fn isotropic(n: usize, sigma: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "needs at least one agent" });
        }
        Self::per_agent(vec![sigma; n])
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn sigma(&self, i: usize) -> T {
        self.sigmas[i]
    }

    pub fn sigmas(&self) -> &[T] {
        &self.sigmas
    }
}

/// Stacked noisy bearings from n seekers together with the seeker
/// position snapshot that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T: Real> {
    bearings: Vec<UnitBearing<T>>,
    seeker_positions: Vec<Vector3<T>>,
    timestamp: T,
}

impl<T: Real> MeasurementSet<T> {
    /// Builds a measurement set; bearings and positions must pair up.
    pub fn new(
        bearings: Vec<UnitBearing<T>>,
        seeker_positions: Vec<Vector3<T>>,
        timestamp: T,
    ) -> Result<Self> {
        if bearings.len() != seeker_positions.len() {
            return Err(Error::DimensionMismatch {
                what: "bearings vs seeker positions",
                expected: seeker_positions.len(),
                actual: bearings.len(),
            });
        }
        if bearings.is_empty() {
            return Err(Error::InsufficientAgents { required: 1, actual: 0 });
        }
        Ok(Self { bearings, seeker_positions, timestamp })
    }

    /// Draws one synthetic measurement per seeker, in seeker order.
    pub fn sample<R: Rng>(
        seekers: &[Vector3<T>],
        target: &Vector3<T>,
        model: &NoiseModel<T>,
        timestamp: T,
        rng: &mut R,
    ) -> Result<Self>
    where
        StandardNormal: Distribution<T>,
    {
        if seekers.len() != model.len() {
            return Err(Error::DimensionMismatch {
                what: "seekers vs noise model",
                expected: model.len(),
                actual: seekers.len(),
            });
        }
        let mut bearings = Vec::with_capacity(seekers.len());
        for (i, s) in seekers.iter().enumerate() {
            let b = measure(s, target, model.sigma(i), rng)
                .map_err(|_| Error::CoincidentPoints { seeker: Some(i) })?;
            bearings.push(b);
        }
        Ok(Self { bearings, seeker_positions: seekers.to_vec(), timestamp })
    }

    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bearings.is_empty()
    }

    pub fn bearings(&self) -> &[UnitBearing<T>] {
        &self.bearings
    }

    pub fn seeker_positions(&self) -> &[Vector3<T>] {
        &self.seeker_positions
    }

    pub fn timestamp(&self) -> T {
        self.timestamp
    }
}

/// Draws `v = P(b) w` with `w ~ N(0, σ² I₃)`, realizing the tangent
/// covariance `σ² P(b)` exactly.
pub fn sample_tangent_perturbation<T: Real, R: Rng>(
    b: UnitBearing<T>,
    sigma: T,
    rng: &mut R,
) -> TangentVector<T>
where
    StandardNormal: Distribution<T>,
{
    let w = Vector3::new(
        rng.sample::<T, _>(StandardNormal) * sigma,
        rng.sample::<T, _>(StandardNormal) * sigma,
        rng.sample::<T, _>(StandardNormal) * sigma,
    );
    TangentVector::from_ambient(b, w)
}

/// One noisy bearing: the true bearing pushed along the sphere by a
/// sampled tangent perturbation.
pub fn measure<T: Real, R: Rng>(
    seeker: &Vector3<T>,
    target: &Vector3<T>,
    sigma: T,
    rng: &mut R,
) -> Result<UnitBearing<T>>
where
    StandardNormal: Distribution<T>,
{
    let b = geometry::bearing(seeker, target)?;
    let v = sample_tangent_perturbation(b, sigma, rng);
    Ok(geometry::exp_map(&v))
}

/// Additive decomposition of the spherical perturbation:
///
/// `n = (cos‖v‖ − 1) b + sinc(‖v‖) v`
///
/// so that `exp_b(v) = b + n` holds exactly.
pub fn additive_noise<T: Real>(b: UnitBearing<T>, v: &TangentVector<T>) -> Vector3<T> {
    debug_assert!((v.base().vector() - b.vector()).norm() < real(1e-9));
    let vv = v.vector();
    let x = vv.norm();
    b.vector() * (x.cos() - T::one()) + vv * geometry::sinc(x)
}

/// Block-diagonal 3n×3n surrogate covariance `diag(σ_1² I₃, …, σ_n² I₃)`
/// of the stacked additive noise; its inverse is the default WLS weight.
pub fn stacked_noise_covariance<T: Real>(model: &NoiseModel<T>) -> DMatrix<T> {
    let n = model.len();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        let s2 = model.sigma(i) * model.sigma(i);
        for k in 0..3 {
            m[(3 * i + k, 3 * i + k)] = s2;
        }
    }
    m
}
