//! Sphere and projector primitives shared by all modules.
//!
//! Bearings live on the unit 2-sphere S² embedded in R³. Measurement
//! perturbations live in the tangent plane T_b S² of the true bearing b
//! and are mapped back onto the sphere by the exponential map along a
//! great circle. The Jacobian of the stacked bearing function is a
//! 3n×3 stack of orthogonal projectors scaled by inverse range.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Norm below which a vector is considered zero and cannot be normalized.
pub const ZERO_NORM_TOL: f64 = 1e-12;
/// Separation below which two points are considered coincident.
pub const COINCIDENT_TOL: f64 = 1e-9;
/// Allowed deviation from orthogonality for a tangent vector, |v·b|/‖v‖.
pub const TANGENT_ORTHO_TOL: f64 = 1e-10;
/// Below this tangent norm, sinc is evaluated by its Taylor expansion.
const SINC_TAYLOR_THRESHOLD: f64 = 1e-4;

/// A direction on the unit 2-sphere: a unit-norm 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitBearing<T: Real> {
    direction: Vector3<T>,
}

impl<T: Real> UnitBearing<T> {
    /// Normalizes `v` onto the sphere; fails on a (near-)zero vector.
    pub fn try_new(v: Vector3<T>) -> Result<Self> {
        let n = v.norm();
        if n < real(ZERO_NORM_TOL) {
            return Err(Error::ZeroVector);
        }
        Ok(Self { direction: v / n })
    }

    /// Wraps a vector already known to be unit norm.
    pub(crate) fn new_unchecked(direction: Vector3<T>) -> Self {
        debug_assert!((direction.norm() - T::one()).abs() < real(1e-9));
        Self { direction }
    }

    /// The underlying unit vector.
    pub fn vector(&self) -> Vector3<T> {
        self.direction
    }

    /// Orthogonal projector onto the tangent plane at this bearing,
    /// `I₃ − b bᵀ`.
    pub fn projector(&self) -> Matrix3<T> {
        Matrix3::identity() - self.direction * self.direction.transpose()
    }
}

/// A vector in the tangent plane of a bearing, `v ∈ T_b S²`, in radians
/// of arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector<T: Real> {
    base: UnitBearing<T>,
    v: Vector3<T>,
}

impl<T: Real> TangentVector<T> {
    /// Builds a tangent vector, checking `v ⊥ base`.
    pub fn try_new(base: UnitBearing<T>, v: Vector3<T>) -> Result<Self> {
        let n = v.norm();
        if n > T::zero() && v.dot(&base.vector()).abs() > real::<T>(TANGENT_ORTHO_TOL) * n {
            return Err(Error::TangentNotOrthogonal);
        }
        Ok(Self { base, v })
    }

    /// Projects an arbitrary ambient vector onto the tangent plane at `base`.
    pub fn from_ambient(base: UnitBearing<T>, w: Vector3<T>) -> Self {
        let v = base.projector() * w;
        Self { base, v }
    }

    pub fn base(&self) -> UnitBearing<T> {
        self.base
    }

    pub fn vector(&self) -> Vector3<T> {
        self.v
    }
}

/// Stacked bearing-rigidity Jacobian: n blocks of 3×3, block i equal to
/// `P(f_i(p̂)) / ‖p̂ − p_i‖`, forming a 3n×3 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedJacobian<T: Real> {
    blocks: Vec<Matrix3<T>>,
}

impl<T: Real> StackedJacobian<T> {
    /// Number of seeker blocks.
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// The i-th 3×3 block.
    pub fn block(&self, i: usize) -> &Matrix3<T> {
        &self.blocks[i]
    }

    /// Assembles the dense 3n×3 matrix.
    pub fn to_dmatrix(&self) -> DMatrix<T> {
        let n = self.blocks.len();
        let mut m = DMatrix::zeros(3 * n, 3);
        for (i, b) in self.blocks.iter().enumerate() {
            m.view_mut((3 * i, 0), (3, 3)).copy_from(b);
        }
        m
    }
}

/// Orthogonal projection operator `P(x) = I₃ − (x xᵀ)/(xᵀx)`.
///
/// Symmetric, idempotent, and annihilates `x`; its eigenvalues are
/// {0, 1, 1} with the zero eigenvector along `x`.
pub fn orthogonal_projector<T: Real>(x: &Vector3<T>) -> Result<Matrix3<T>> {
    let nsq = x.norm_squared();
    if nsq.sqrt() < real(ZERO_NORM_TOL) {
        return Err(Error::ZeroVector);
    }
    Ok(Matrix3::identity() - x * x.transpose() / nsq)
}

/// Unit bearing from `observer` toward `target`.
pub fn bearing<T: Real>(observer: &Vector3<T>, target: &Vector3<T>) -> Result<UnitBearing<T>> {
    let diff = target - observer;
    let d = diff.norm();
    if d < real(COINCIDENT_TOL) {
        return Err(Error::CoincidentPoints { seeker: None });
    }
    Ok(UnitBearing::new_unchecked(diff / d))
}

/// Exponential map on S²: moves from the base bearing along the great
/// circle with initial direction `v` by arc length `‖v‖`:
///
/// `exp_b(v) = cos(‖v‖) b + sinc(‖v‖) v`
///
/// The sin(x)/x factor is evaluated by Taylor expansion near zero, so
/// the map is well defined down to `v = 0` (where it returns `b`).
pub fn exp_map<T: Real>(t: &TangentVector<T>) -> UnitBearing<T> {
    let v = t.vector();
    let x = v.norm();
    let b = t.base().vector();
    let out = b * x.cos() + v * sinc(x);
    UnitBearing::new_unchecked(out)
}

/// sin(x)/x with a series fallback below the Taylor threshold.
pub(crate) fn sinc<T: Real>(x: T) -> T {
    if x < real(SINC_TAYLOR_THRESHOLD) {
        let x2 = x * x;
        T::one() - x2 / real(6.0) + x2 * x2 / real(120.0)
    } else {
        x.sin() / x
    }
}

/// Jacobian of the stacked bearing function evaluated at `p_est`:
/// block i is `P(bearing(p_i, p_est)) / ‖p_est − p_i‖`.
pub fn rigidity_jacobian<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
) -> Result<StackedJacobian<T>> {
    let mut blocks = Vec::with_capacity(seekers.len());
    for (i, p_i) in seekers.iter().enumerate() {
        let d = (p_est - p_i).norm();
        if d < real(COINCIDENT_TOL) {
            return Err(Error::CoincidentPoints { seeker: Some(i) });
        }
        let b = bearing(p_i, p_est).map_err(|_| Error::CoincidentPoints { seeker: Some(i) })?;
        blocks.push(b.projector() / d);
    }
    Ok(StackedJacobian { blocks })
}
