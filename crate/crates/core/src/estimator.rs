//! Target position estimation from one set of bearing measurements.
//!
//! The pipeline is: a closed-form initialization that intersects the
//! measured lines in the least-squares sense, followed by a Gauss-Newton
//! iteration on the weighted chordal residual `b̃_S − f_S(p)`, and a
//! linear-regression covariance for the converged estimate.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{self, COINCIDENT_TOL};
use crate::scalar::{real, Real};
use crate::sensing::{stacked_noise_covariance, MeasurementSet, NoiseModel};

/// Relative eigenvalue ratio below which the line-intersection matrix A
/// is considered collinear.
const INIT_DEGENERACY_TOL: f64 = 1e-9;
/// Relative smallest eigenvalue below which a normal matrix is singular.
const NORMAL_DEGENERACY_TOL: f64 = 1e-12;
/// A Gauss-Newton step may not land closer than this to a seeker.
const SEEKER_CLEARANCE: f64 = 1e-6;
/// Maximum number of step halvings used to keep clear of seekers.
const MAX_HALVINGS: usize = 20;

/// Configuration of the iterative WLS solver.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsConfig<T: Real> {
    tolerance: T,
    max_iterations: usize,
    weight: DMatrix<T>,
}

impl<T: Real> WlsConfig<T> {
    /// Default iteration cap; the solver needs no more than four
    /// iterations in practice, the cap only bounds adversarial inputs.
    pub const DEFAULT_MAX_ITERATIONS: usize = 50;

    /// Builds a config with an explicit 3n×3n weight matrix.
    pub fn new(tolerance: T, max_iterations: usize, weight: DMatrix<T>) -> Result<Self> {
        if tolerance <= T::zero() {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive" });
        }
        if max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                reason: "must be at least 1",
            });
        }
        let (r, c) = weight.shape();
        if r != c || r == 0 || r % 3 != 0 {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: "must be square with dimension a positive multiple of 3",
            });
        }
        if weight.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter { name: "weight", reason: "must be finite" });
        }
        let scale = weight.amax().max(T::one());
        for i in 0..r {
            for j in (i + 1)..r {
                if (weight[(i, j)] - weight[(j, i)]).abs() > real::<T>(1e-10) * scale {
                    return Err(Error::InvalidParameter {
                        name: "weight",
                        reason: "must be symmetric",
                    });
                }
            }
        }
        if weight.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: "must be positive definite",
            });
        }
        Ok(Self { tolerance, max_iterations, weight })
    }

    /// The usual choice: weight equal to the inverse of the stacked
    /// noise covariance surrogate, `W = Σ_n⁻¹ = diag(σ_i⁻² I₃)`.
    pub fn from_noise_model(
        tolerance: T,
        max_iterations: usize,
        model: &NoiseModel<T>,
    ) -> Result<Self> {
        let n = model.len();
        let mut w = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..n {
            let inv = T::one() / (model.sigma(i) * model.sigma(i));
            for k in 0..3 {
                w[(3 * i + k, 3 * i + k)] = inv;
            }
        }
        Self::new(tolerance, max_iterations, w)
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn weight(&self) -> &DMatrix<T> {
        &self.weight
    }
}

/// A target position estimate with its covariance and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T: Real> {
    pub position: Vector3<T>,
    pub covariance: Matrix3<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Warm start: reuse a converged estimate as the next initial guess.
/// Returns `None` when the previous solve did not converge, in which
/// case the caller falls back to [`initialize`].
pub fn warm_start<T: Real>(previous: &Estimate<T>) -> Option<Vector3<T>> {
    previous.converged.then_some(previous.position)
}

/// Cumulative squared distance from `p` to the measured lines,
/// `½ Σ (p_i − p)ᵀ P(b̃_i) (p_i − p)`.
///
/// Convex and quadratic in `p`; zero exactly when `p` lies on every
/// measured line.
pub fn line_distance_cost<T: Real>(p: &Vector3<T>, measurements: &MeasurementSet<T>) -> T {
    let mut acc = T::zero();
    for (b, p_i) in measurements.bearings().iter().zip(measurements.seeker_positions()) {
        let diff = p_i - p;
        // P idempotent: diffᵀP diff = ‖P diff‖², the squared form is
        // accurate down to zero cost
        acc += (b.projector() * diff).norm_squared();
    }
    acc / real(2.0)
}

/// Closed-form initial estimate: the global minimizer `A⁻¹ y` of the
/// line-distance cost, with `A = Σ P(b̃_i)` and `y = Σ P(b̃_i) p_i`.
pub fn initialize<T: Real>(measurements: &MeasurementSet<T>) -> Result<Vector3<T>> {
    let n = measurements.len();
    if n < 2 {
        return Err(Error::InsufficientAgents { required: 2, actual: n });
    }
    let mut a = Matrix3::<T>::zeros();
    let mut y = Vector3::<T>::zeros();
    for (b, p_i) in measurements.bearings().iter().zip(measurements.seeker_positions()) {
        let proj = b.projector();
        a += proj;
        y += proj * p_i;
    }
    let eigs = a.symmetric_eigen().eigenvalues;
    let (lo, hi) = (eigs.min(), eigs.max());
    if lo < real::<T>(INIT_DEGENERACY_TOL) * hi {
        return Err(Error::DegenerateGeometry { context: "all bearings nearly collinear" });
    }
    a.lu()
        .solve(&y)
        .ok_or(Error::DegenerateGeometry { context: "line-intersection matrix not invertible" })
}

/// Iterative WLS solution of the target position.
///
/// Starting from `initial`, repeats the Gauss-Newton update
///
/// `Δp = (FᵀWF)⁻¹ FᵀW (b̃_S − f_S(p))`, `p ← p + Δp`
///
/// until `‖Δp‖ ≤ tolerance` or the iteration cap is reached; the
/// `converged` flag records which happened. Steps that would land within
/// the seeker clearance are halved. The returned covariance is
/// `(FᵀWF)⁻¹` at the final estimate, which is the linear-regression
/// covariance when `W` is the inverse noise covariance.
pub fn wls_solve<T: Real>(
    initial: &Vector3<T>,
    measurements: &MeasurementSet<T>,
    config: &WlsConfig<T>,
) -> Result<Estimate<T>> {
    let n = measurements.len();
    if n < 2 {
        return Err(Error::InsufficientAgents { required: 2, actual: n });
    }
    if config.weight.nrows() != 3 * n {
        return Err(Error::DimensionMismatch {
            what: "weight matrix vs measurements",
            expected: 3 * n,
            actual: config.weight.nrows(),
        });
    }
    let positions = measurements.seeker_positions();
    for (i, p_i) in positions.iter().enumerate() {
        if (initial - p_i).norm() < real(COINCIDENT_TOL) {
            return Err(Error::CoincidentPoints { seeker: Some(i) });
        }
    }

    let mut p = *initial;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let (normal, rhs) = normal_equations(&p, measurements, &config.weight)?;
        let mut step = solve_normal(&normal, &rhs)?;

        // keep the iterate clear of the 1/d singularities at the seekers
        let mut halvings = 0;
        while halvings < MAX_HALVINGS
            && positions.iter().any(|p_i| (p + step - p_i).norm() < real(SEEKER_CLEARANCE))
        {
            step /= real::<T>(2.0);
            halvings += 1;
        }

        p += step;
        iterations += 1;
        if step.norm() <= config.tolerance {
            converged = true;
            break;
        }
    }

    let (normal, _) = normal_equations(&p, measurements, &config.weight)?;
    let covariance = invert_normal(&normal)?;
    Ok(Estimate { position: p, covariance, iterations, converged })
}

/// Covariance of the WLS estimate by the linear-regression sandwich
///
/// `Σ_p̂ = (FᵀWF)⁻¹FᵀW · Σ_n · ((FᵀWF)⁻¹FᵀW)ᵀ`
///
/// which collapses to `(FᵀΣ_n⁻¹F)⁻¹` for the weight choice `W = Σ_n⁻¹`.
pub fn estimate_covariance<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    weight: &DMatrix<T>,
    noise_cov: &DMatrix<T>,
) -> Result<Matrix3<T>> {
    let n = seekers.len();
    if weight.shape() != (3 * n, 3 * n) {
        return Err(Error::DimensionMismatch {
            what: "weight matrix vs seekers",
            expected: 3 * n,
            actual: weight.nrows(),
        });
    }
    if noise_cov.shape() != (3 * n, 3 * n) {
        return Err(Error::DimensionMismatch {
            what: "noise covariance vs seekers",
            expected: 3 * n,
            actual: noise_cov.nrows(),
        });
    }
    let f = geometry::rigidity_jacobian(p_est, seekers)?.to_dmatrix();
    let ftw = f.transpose() * weight;
    let normal = to_matrix3(&(&ftw * &f));
    let normal_inv = invert_normal(&normal)?;
    let gain = DMatrix::from_fn(3, 3, |i, j| normal_inv[(i, j)]) * ftw;
    let sandwich = &gain * noise_cov * gain.transpose();
    Ok(to_matrix3(&sandwich))
}

/// Convenience form of the covariance at a hypothetical estimate under
/// the surrogate noise model, `(FᵀΣ_n⁻¹F)⁻¹`; this is what the Monte
/// Carlo summary reports as the theoretical covariance.
pub fn theoretical_covariance<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
) -> Result<Matrix3<T>> {
    let cov = stacked_noise_covariance(model);
    let mut weight = DMatrix::zeros(cov.nrows(), cov.ncols());
    for i in 0..cov.nrows() {
        weight[(i, i)] = T::one() / cov[(i, i)];
    }
    estimate_covariance(p_est, seekers, &weight, &cov)
}

fn normal_equations<T: Real>(
    p: &Vector3<T>,
    measurements: &MeasurementSet<T>,
    weight: &DMatrix<T>,
) -> Result<(Matrix3<T>, Vector3<T>)> {
    let positions = measurements.seeker_positions();
    let f = geometry::rigidity_jacobian(p, positions)?.to_dmatrix();
    let mut residual = DVector::zeros(3 * measurements.len());
    for (i, (b, p_i)) in
        measurements.bearings().iter().zip(positions).enumerate()
    {
        let predicted = geometry::bearing(p_i, p)
            .map_err(|_| Error::CoincidentPoints { seeker: Some(i) })?;
        let r = b.vector() - predicted.vector();
        residual.rows_mut(3 * i, 3).copy_from(&r);
    }
    let ftw = f.transpose() * weight;
    let normal = to_matrix3(&(&ftw * &f));
    let rhs = &ftw * residual;
    Ok((normal, Vector3::new(rhs[0], rhs[1], rhs[2])))
}

fn solve_normal<T: Real>(normal: &Matrix3<T>, rhs: &Vector3<T>) -> Result<Vector3<T>> {
    check_normal(normal)?;
    normal
        .lu()
        .solve(rhs)
        .ok_or(Error::DegenerateGeometry { context: "normal matrix not invertible" })
}

fn invert_normal<T: Real>(normal: &Matrix3<T>) -> Result<Matrix3<T>> {
    check_normal(normal)?;
    normal
        .try_inverse()
        .ok_or(Error::DegenerateGeometry { context: "normal matrix not invertible" })
}

fn check_normal<T: Real>(normal: &Matrix3<T>) -> Result<()> {
    let eigs = normal.symmetric_eigen().eigenvalues;
    if eigs.min() < real::<T>(NORMAL_DEGENERACY_TOL) * eigs.max() {
        return Err(Error::DegenerateGeometry { context: "normal matrix nearly singular" });
    }
    Ok(())
}

fn to_matrix3<T: Real>(m: &DMatrix<T>) -> Matrix3<T> {
    debug_assert_eq!(m.shape(), (3, 3));
    Matrix3::from_fn(|i, j| m[(i, j)])
}
