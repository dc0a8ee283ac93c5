//! Active-sensing seeker control.
//!
//! The estimation reward is the determinant of the inverse estimate
//! covariance, a D-optimality criterion: maximizing it shrinks the
//! uncertainty ellipsoid of the target estimate. Each seeker ascends
//! the reward gradient projected onto the plane orthogonal to its
//! estimated bearing, so it moves on the sphere centered at the current
//! estimate and its estimated distance to the target is preserved.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{self, COINCIDENT_TOL};
use crate::scalar::{real, Real};
use crate::sensing::NoiseModel;

/// Gain of the projected gradient-ascent law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig<T: Real> {
    gain: T,
}

impl<T: Real> ControlConfig<T> {
    pub fn new(gain: T) -> Result<Self> {
        if gain <= T::zero() {
            return Err(Error::InvalidParameter { name: "gain", reason: "must be positive" });
        }
        Ok(Self { gain })
    }

    pub fn gain(&self) -> T {
        self.gain
    }
}

/// Commanded velocity for one seeker; always orthogonal to that
/// seeker's estimated bearing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T: Real> {
    pub seeker: usize,
    pub velocity: Vector3<T>,
}

/// The reward gradient with respect to one seeker position, split into
/// the component along the estimated bearing (range direction) and the
/// component in the tangent plane (bearing direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardGradient<T: Real> {
    pub radial: Vector3<T>,
    pub tangential: Vector3<T>,
}

impl<T: Real> RewardGradient<T> {
    /// The full gradient vector.
    pub fn total(&self) -> Vector3<T> {
        self.radial + self.tangential
    }
}

/// Inverse covariance of the estimate in closed form: the weighted sum
/// of scaled projectors
///
/// `M = Σ_i (1/σ_i²) (1/d̂_i²) P(b̂_i)`
///
/// with `d̂_i = ‖p̂ − p_i‖` and `b̂_i` the estimated bearing of seeker i.
pub fn information_matrix<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
) -> Result<Matrix3<T>> {
    check_agents(seekers, model)?;
    let mut m = Matrix3::zeros();
    for (i, p_i) in seekers.iter().enumerate() {
        let (b, d) = estimated_bearing(p_est, p_i, i)?;
        let s2 = model.sigma(i) * model.sigma(i);
        m += b.projector() / (s2 * d * d);
    }
    Ok(m)
}

/// Estimation reward `J = det(M)`: the D-optimality value of the
/// current seeker placement relative to the estimate.
pub fn reward<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
) -> Result<T> {
    Ok(information_matrix(p_est, seekers, model)?.determinant())
}

/// Analytic gradient `∂J/∂p_i`, split into its radial and tangential
/// parts:
///
/// `∂J/∂p_i = (2/(σ_i² d̂_i³)) [ tr(adj(M) P(b̂_i)) b̂_i + P(b̂_i) adj(M) b̂_i ]`
///
/// The identity `dJ = tr(adj(M) dM)` is applied to the closed-form
/// information matrix; using the adjugate instead of `det(M) M⁻¹` keeps
/// the gradient finite even when M is singular. The first addendum is
/// along `b̂_i` (range direction), the second lies in the tangent plane.
pub fn reward_gradient_parts<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
    i: usize,
) -> Result<RewardGradient<T>> {
    check_agents(seekers, model)?;
    let m = information_matrix(p_est, seekers, model)?;
    let adj = adjugate(&m);
    let (b, d) = estimated_bearing(p_est, &seekers[i], i)?;
    let proj = b.projector();
    let bv = b.vector();
    let s2 = model.sigma(i) * model.sigma(i);
    let scale = real::<T>(2.0) / (s2 * d * d * d);
    Ok(RewardGradient {
        radial: bv * ((adj * proj).trace() * scale),
        tangential: proj * (adj * bv) * scale,
    })
}

/// Full analytic gradient `∂J/∂p_i`; matches central finite differences
/// of [`reward`] to high relative accuracy.
pub fn reward_gradient<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
    i: usize,
) -> Result<Vector3<T>> {
    Ok(reward_gradient_parts(p_est, seekers, model, i)?.total())
}

/// Projected gradient-ascent input for seeker i:
///
/// `u_i = k P(b̂_i) ∂J/∂p_i`
///
/// The projector removes the radial part of the gradient, so the
/// velocity is tangential to the sphere centered at the estimate and
/// equals the gain times the tangential gradient addendum.
pub fn control_input<T: Real>(
    p_est: &Vector3<T>,
    seekers: &[Vector3<T>],
    model: &NoiseModel<T>,
    i: usize,
    config: &ControlConfig<T>,
) -> Result<ControlOutput<T>> {
    let grad = reward_gradient(p_est, seekers, model, i)?;
    let (b, _) = estimated_bearing(p_est, &seekers[i], i)?;
    Ok(ControlOutput { seeker: i, velocity: b.projector() * grad * config.gain })
}

fn check_agents<T: Real>(seekers: &[Vector3<T>], model: &NoiseModel<T>) -> Result<()> {
    if seekers.len() != model.len() {
        return Err(Error::DimensionMismatch {
            what: "seekers vs noise model",
            expected: model.len(),
            actual: seekers.len(),
        });
    }
    Ok(())
}

fn estimated_bearing<T: Real>(
    p_est: &Vector3<T>,
    p_i: &Vector3<T>,
    i: usize,
) -> Result<(geometry::UnitBearing<T>, T)> {
    let d = (p_est - p_i).norm();
    if d < real(COINCIDENT_TOL) {
        return Err(Error::CoincidentPoints { seeker: Some(i) });
    }
    let b = geometry::bearing(p_i, p_est)
        .map_err(|_| Error::CoincidentPoints { seeker: Some(i) })?;
    Ok((b, d))
}

/// Adjugate of a 3×3 matrix: `adj(M) M = det(M) I`, defined for
/// singular matrices as well.
fn adjugate<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let c = |r: usize, s: usize| -> T {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        m[(r1, s1)] * m[(r2, s2)] - m[(r1, s2)] * m[(r2, s1)]
    };
    // adj = cofactor(M)ᵀ
    Matrix3::from_fn(|i, j| c(j, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type V = Vector3<f64>;
    const DEG: f64 = std::f64::consts::PI / 180.0;

    fn clustered() -> Vec<V> {
        vec![V::new(-15.0, 0.0, 0.0), V::new(-15.0, 3.0, 0.0), V::new(-15.0, 0.0, 1.0)]
    }

    fn spaced() -> Vec<V> {
        vec![V::new(0.0, 15.0, 0.0), V::new(-15.0, 3.0, 0.0), V::new(-15.0, 0.0, 1.0)]
    }

    fn well_spaced() -> Vec<V> {
        vec![V::new(0.0, 15.0, 0.0), V::new(-15.0, 3.0, 0.0), V::new(0.0, 0.0, 15.0)]
    }

    #[test]
    fn adjugate_matches_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let prod = adjugate(&m) * m;
            assert_relative_eq!(prod, Matrix3::identity() * m.determinant(), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_seeker_information_is_rank_two() {
        let model = NoiseModel::isotropic(1, DEG).unwrap();
        let m = information_matrix(&V::zeros(), &[V::new(-15.0, 0.0, 0.0)], &model).unwrap();
        assert!(m.determinant().abs() < 1e-9 * m.norm().powi(3));
        let eigs = m.symmetric_eigen().eigenvalues;
        let nonzero = eigs.iter().filter(|e| e.abs() > 1e-9 * m.norm()).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn three_orthogonal_axes_give_isotropic_information() {
        let d = 10.0;
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let seekers = [V::new(d, 0.0, 0.0), V::new(0.0, d, 0.0), V::new(0.0, 0.0, d)];
        let m = information_matrix(&V::zeros(), &seekers, &model).unwrap();
        let scalar = 2.0 / (DEG * DEG * d * d);
        assert_relative_eq!(m, Matrix3::identity() * scalar, max_relative = 1e-12);
        assert_relative_eq!(m.determinant(), scalar.powi(3), max_relative = 1e-12);
    }

    #[test]
    fn information_matrix_matches_jacobian_route() {
        // closed form equals FᵀΣ_n⁻¹F assembled from the stacked Jacobian
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let p = V::new(0.3, -0.1, 0.2);
        let seekers = well_spaced();
        let m = information_matrix(&p, &seekers, &model).unwrap();
        let f = geometry::rigidity_jacobian(&p, &seekers).unwrap().to_dmatrix();
        let via_jacobian = f.transpose() * f / (DEG * DEG);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[(i, j)], via_jacobian[(i, j)], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn reward_reproduces_reported_scenario_values() {
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let j = reward(&V::zeros(), &clustered(), &model).unwrap();
        assert_relative_eq!(j, 755.186, max_relative = 1e-4);
        let j = reward(&V::zeros(), &spaced(), &model).unwrap();
        assert_relative_eq!(j, 17998.4, max_relative = 1e-4);
        let j = reward(&V::zeros(), &well_spaced(), &model).unwrap();
        assert_relative_eq!(j, 23675.46, max_relative = 1e-4);
    }

    #[test]
    fn reward_vanishes_for_collinear_seekers() {
        let model = NoiseModel::isotropic(2, DEG).unwrap();
        let seekers = [V::new(-15.0, 0.0, 0.0), V::new(-20.0, 0.0, 0.0)];
        let m = information_matrix(&V::zeros(), &seekers, &model).unwrap();
        assert!(m.determinant().abs() < 1e-9 * m.norm().powi(3));
    }

    #[test]
    fn reward_rejects_seeker_at_estimate() {
        let model = NoiseModel::isotropic(2, DEG).unwrap();
        let seekers = [V::new(-15.0, 0.0, 0.0), V::zeros()];
        assert_eq!(
            reward(&V::zeros(), &seekers, &model),
            Err(Error::CoincidentPoints { seeker: Some(1) })
        );
    }

    fn finite_difference_gradient(
        p_est: &V,
        seekers: &[V],
        model: &NoiseModel<f64>,
        i: usize,
        h: f64,
    ) -> V {
        let mut g = V::zeros();
        for axis in 0..3 {
            let mut plus = seekers.to_vec();
            let mut minus = seekers.to_vec();
            plus[i][axis] += h;
            minus[i][axis] -= h;
            g[axis] = (reward(p_est, &plus, model).unwrap()
                - reward(p_est, &minus, model).unwrap())
                / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let model3 = NoiseModel::isotropic(3, DEG).unwrap();
        for _ in 0..10 {
            let seekers: Vec<V> = (0..3)
                .map(|_| {
                    V::new(
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(-20.0..20.0),
                        rng.gen_range(-20.0..20.0),
                    )
                })
                .filter(|_| true)
                .collect();
            if seekers.iter().any(|s| s.norm() < 5.0) {
                continue;
            }
            for i in 0..seekers.len() {
                let analytic = reward_gradient(&V::zeros(), &seekers, &model3, i).unwrap();
                let fd = finite_difference_gradient(&V::zeros(), &seekers, &model3, i, 1e-5);
                assert!(
                    (analytic - fd).norm() < 1e-6 * fd.norm(),
                    "agent {i}: analytic {analytic:?} vs fd {fd:?}"
                );
            }
        }
    }

    #[test]
    fn gradient_is_stationary_for_symmetric_axes() {
        let d = 12.0;
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let seekers = [V::new(d, 0.0, 0.0), V::new(0.0, d, 0.0), V::new(0.0, 0.0, d)];
        for i in 0..3 {
            let parts = reward_gradient_parts(&V::zeros(), &seekers, &model, i).unwrap();
            assert!(
                parts.tangential.norm() < 1e-9 * parts.radial.norm(),
                "tangential component should vanish at the symmetric optimum"
            );
        }
    }

    #[test]
    fn gradient_radial_component_points_at_target() {
        // J grows as seekers close in (1/d² weighting), so the gradient
        // has positive projection on the bearing toward the estimate
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        for _ in 0..20 {
            let seekers: Vec<V> = (0..3)
                .map(|_| {
                    let v = V::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    v.normalize() * rng.gen_range(8.0..20.0)
                })
                .collect();
            for i in 0..3 {
                let g = reward_gradient(&V::zeros(), &seekers, &model, i).unwrap();
                let b = geometry::bearing(&seekers[i], &V::zeros()).unwrap().vector();
                assert!(g.dot(&b) > 0.0);
            }
        }
    }

    #[test]
    fn control_is_tangential_and_matches_tangential_gradient() {
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let config = ControlConfig::new(0.002).unwrap();
        let seekers = clustered();
        for i in 0..3 {
            let u = control_input(&V::zeros(), &seekers, &model, i, &config).unwrap();
            let b = geometry::bearing(&seekers[i], &V::zeros()).unwrap().vector();
            assert!(u.velocity.dot(&b).abs() < 1e-10 * (1.0 + u.velocity.norm()));
            // projecting the full gradient equals the tangential addendum alone
            let parts = reward_gradient_parts(&V::zeros(), &seekers, &model, i).unwrap();
            let expected = parts.tangential * config.gain();
            assert!(
                (u.velocity - expected).norm() < 1e-10 * (1.0 + expected.norm()),
                "projected gradient law deviates from its tangential form"
            );
            assert!(u.velocity.norm() > 0.0, "clustered seekers should move");
        }
    }

    #[test]
    fn control_vanishes_at_symmetric_optimum() {
        let d = 12.0;
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let config = ControlConfig::new(0.002).unwrap();
        let seekers = [V::new(d, 0.0, 0.0), V::new(0.0, d, 0.0), V::new(0.0, 0.0, d)];
        for i in 0..3 {
            let u = control_input(&V::zeros(), &seekers, &model, i, &config).unwrap();
            assert!(u.velocity.norm() < 1e-9);
        }
    }

    #[test]
    fn reward_is_rotation_invariant() {
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let p_est = V::new(0.5, -0.3, 0.1);
        let seekers = spaced();
        let base = reward(&p_est, &seekers, &model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let axis = Unit::new_normalize(V::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
            let rot = Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..std::f64::consts::TAU));
            let rotated: Vec<V> = seekers.iter().map(|s| p_est + rot * (s - p_est)).collect();
            let j = reward(&p_est, &rotated, &model).unwrap();
            assert_relative_eq!(j, base, max_relative = 1e-9);
        }
    }

    #[test]
    fn reward_does_not_decrease_along_control_direction() {
        let model = NoiseModel::isotropic(3, DEG).unwrap();
        let tiny = ControlConfig::new(0.002 * 1e-6).unwrap();
        let seekers = clustered();
        let before = reward(&V::zeros(), &seekers, &model).unwrap();
        let moved: Vec<V> = seekers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s + control_input(&V::zeros(), &seekers, &model, i, &tiny).unwrap().velocity
            })
            .collect();
        let after = reward(&V::zeros(), &moved, &model).unwrap();
        assert!(after >= before * (1.0 - 1e-12));
    }

    #[test]
    fn config_rejects_nonpositive_gain() {
        assert!(ControlConfig::new(0.0).is_err());
        assert!(ControlConfig::new(-0.1).is_err());
    }
}
