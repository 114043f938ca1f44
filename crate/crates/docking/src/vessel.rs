//! 3-DOF surface vessel model:
//!
//! ```text
//! eta_dot = J(psi) nu
//! M nu_dot + D nu = tau
//! ```
//!
//! with pose eta = [x, y, psi] in the NED frame and body velocities
//! nu = [u, v, r]. M and D are assembled from non-dimensional (bis-system)
//! matrices through N = diag(1, 1, L):
//!
//! ```text
//! M = m N M_bis N,    D = m sqrt(g / L) N D_bis N
//! ```

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::ConvexPolygon;

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = theta.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Earth-fixed pose: north, east (meters) and yaw (radians, wrapped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: wrap_angle(psi),
        }
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.psi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Planar position.
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

/// Body-fixed velocities: surge, sway (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl Velocity {
    pub fn new(u: f64, v: f64, r: f64) -> Self {
        Self { u, v, r }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.r)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn speed(&self) -> f64 {
        (self.u * self.u + self.v * self.v).sqrt()
    }
}

/// Rotation from the body frame to NED, full 3x3 (positions and yaw).
pub fn rotation_full(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Planar body-to-NED rotation, the upper-left 2x2 block of [`rotation_full`].
pub fn rotation_planar(psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// d/dpsi of [`rotation_planar`].
pub fn rotation_planar_deriv(psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    Matrix2::new(-s, -c, c, -s)
}

/// Physical vessel description: normalization parameters, bis-system
/// matrices and the body-frame hull polygon.
#[derive(Debug, Clone)]
pub struct VesselParams {
    /// Length over all, meters.
    pub length: f64,
    /// Dry mass, kg.
    pub mass: f64,
    /// Gravity, m/s^2.
    pub gravity: f64,
    pub m_bis: Matrix3<f64>,
    pub d_bis: Matrix3<f64>,
    /// Body-frame hull vertices, CCW, meters.
    pub hull_vertices: Vec<Vector2<f64>>,
}

impl VesselParams {
    /// Supply-vessel preset (76.2 m, 6000 t) with a linear damping model and
    /// a five-vertex hull outline.
    pub fn northern_clipper() -> Self {
        Self {
            length: 76.2,
            mass: 6.0e6,
            gravity: 9.8,
            m_bis: Matrix3::new(
                1.1274, 0.0, 0.0, //
                0.0, 1.8902, -0.0744, //
                0.0, -0.0744, 0.1278,
            ),
            d_bis: Matrix3::new(
                0.0358, 0.0, 0.0, //
                0.0, 0.1183, -0.0124, //
                0.0, -0.0041, 0.0308,
            ),
            hull_vertices: vec![
                Vector2::new(39.0, 0.0),
                Vector2::new(20.0, 9.0),
                Vector2::new(-39.0, 9.0),
                Vector2::new(-39.0, -9.0),
                Vector2::new(20.0, -9.0),
            ],
        }
    }

    pub fn hull_polygon(&self) -> Result<ConvexPolygon, crate::geometry::GeometryError> {
        ConvexPolygon::new(self.hull_vertices.clone())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("normalization parameters must be positive (L = {length}, m = {mass}, g = {gravity})")]
    BadNormalization {
        length: f64,
        mass: f64,
        gravity: f64,
    },
    #[error("assembled inertia matrix is singular or badly conditioned")]
    SingularInertia,
    #[error("assembled inertia matrix has a non positive definite symmetric part")]
    IndefiniteInertia,
}

/// Assembled dimensional model matrices with a verified inverse.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub m: Matrix3<f64>,
    pub d: Matrix3<f64>,
    pub m_inv: Matrix3<f64>,
}

/// Build M, D and M^-1 from bis-system parameters.
pub fn assemble_model(params: &VesselParams) -> Result<ModelMatrices, ModelError> {
    let (length, mass, gravity) = (params.length, params.mass, params.gravity);
    if !(length > 0.0 && mass > 0.0 && gravity > 0.0) {
        return Err(ModelError::BadNormalization {
            length,
            mass,
            gravity,
        });
    }
    let n = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, length));
    let m = n * params.m_bis * n * mass;
    let d = n * params.d_bis * n * (mass * (gravity / length).sqrt());

    let m_inv = m.try_inverse().ok_or(ModelError::SingularInertia)?;
    let residual = (m * m_inv - Matrix3::identity()).norm() / m.norm().max(1.0) * m.norm();
    if !(residual / m.norm().max(1.0) <= 1e-10) {
        return Err(ModelError::SingularInertia);
    }

    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    if eig.iter().any(|&l| l <= 0.0) {
        return Err(ModelError::IndefiniteInertia);
    }

    Ok(ModelMatrices { m, d, m_inv })
}

/// Continuous dynamics: returns (eta_dot, nu_dot) for pose eta = [x, y, psi],
/// body velocity nu = [u, v, r] and generalized force tau.
pub fn dynamics(
    eta: &Vector3<f64>,
    nu: &Vector3<f64>,
    tau: &Vector3<f64>,
    model: &ModelMatrices,
) -> (Vector3<f64>, Vector3<f64>) {
    let eta_dot = rotation_full(eta[2]) * nu;
    let nu_dot = model.m_inv * (tau - model.d * nu);
    (eta_dot, nu_dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotation_identity_and_quarter_turn() {
        assert_eq!(rotation_full(0.0), Matrix3::identity());
        let j = rotation_full(std::f64::consts::FRAC_PI_2);
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(j, expect, epsilon = 1e-15);
    }

    #[test]
    fn rotation_matches_scalar_trig() {
        // Independent scalar evaluation of the matrix entries.
        let psi = 0.3;
        let j = rotation_full(psi);
        assert_eq!(j[(0, 0)], 0.3f64.cos());
        assert_eq!(j[(0, 1)], -(0.3f64.sin()));
        assert_eq!(j[(1, 0)], 0.3f64.sin());
        assert_eq!(j[(1, 1)], 0.3f64.cos());
        assert_eq!(j[(2, 2)], 1.0);
        assert_eq!(j[(0, 2)], 0.0);
    }

    #[test]
    fn planar_rotation_is_the_upper_block() {
        assert_eq!(rotation_planar(0.0), Matrix2::identity());
        assert_relative_eq!(
            rotation_planar(std::f64::consts::PI),
            Matrix2::new(-1.0, 0.0, 0.0, -1.0),
            epsilon = 1e-15
        );
        for k in 0..16 {
            let psi = k as f64 * 0.41 - 3.0;
            let full = rotation_full(psi);
            let planar = rotation_planar(psi);
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(planar[(i, j)], full[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn rotation_inverse_is_transpose() {
        for k in 0..100 {
            let psi = (k as f64 * 12.9898).sin() * 7.0;
            let prod = rotation_full(psi) * rotation_full(-psi);
            assert_relative_eq!(prod, Matrix3::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn wrap_angle_cases() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        // Modular arithmetic oracle: -3.5 pi + 2 * 2 pi = 0.5 pi.
        assert_relative_eq!(wrap_angle(-3.5 * PI), 0.5 * PI, epsilon = 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        for k in 0..50 {
            let theta = (k as f64 * 0.7331).sin() * 40.0;
            let w = wrap_angle(theta);
            assert!(w > -PI && w <= PI);
            let diff = (theta - w) / (2.0 * PI);
            assert_relative_eq!(diff, diff.round(), epsilon = 1e-9);
        }
    }

    #[test]
    fn assembly_matches_direct_scalar_evaluation() {
        let params = VesselParams::northern_clipper();
        let model = assemble_model(&params).unwrap();
        // Direct evaluation of the normalization formulas.
        let m00 = 6.0e6 * 1.1274;
        assert_relative_eq!(model.m[(0, 0)], m00, max_relative = 1e-6);
        assert_relative_eq!(model.m[(0, 0)], 6.7644e6, max_relative = 1e-6);
        let d00 = 6.0e6 * (9.8f64 / 76.2).sqrt() * 0.0358;
        assert_relative_eq!(model.d[(0, 0)], d00, max_relative = 1e-6);
        assert_relative_eq!(model.d[(0, 0)], 7.7032e4, max_relative = 1e-3);
        // Yaw-yaw entries pick up the L^2 normalization.
        assert_relative_eq!(
            model.m[(2, 2)],
            6.0e6 * 0.1278 * 76.2 * 76.2,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            (model.m * model.m_inv - Matrix3::identity()).norm(),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn identity_scaling_assembles_identity() {
        let params = VesselParams {
            length: 1.0,
            mass: 1.0,
            gravity: 1.0,
            m_bis: Matrix3::identity(),
            d_bis: Matrix3::identity(),
            hull_vertices: VesselParams::northern_clipper().hull_vertices,
        };
        let model = assemble_model(&params).unwrap();
        assert_relative_eq!(model.m, Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(model.d, Matrix3::identity(), epsilon = 1e-14);
    }

    #[test]
    fn singular_bis_matrix_is_rejected() {
        let mut params = VesselParams::northern_clipper();
        params.m_bis[(0, 0)] = 0.0;
        // Zeroing the full first row makes M singular.
        params.m_bis[(0, 1)] = 0.0;
        params.m_bis[(0, 2)] = 0.0;
        assert!(assemble_model(&params).is_err());
    }

    #[test]
    fn equilibrium_and_steady_state() {
        let model = assemble_model(&VesselParams::northern_clipper()).unwrap();
        let zero = Vector3::zeros();
        let (eta_dot, nu_dot) = dynamics(&Vector3::new(10.0, -4.0, 0.7), &zero, &zero, &model);
        assert_eq!(eta_dot, Vector3::zeros());
        assert_eq!(nu_dot, Vector3::zeros());

        // tau = D nu balances the damping exactly.
        let nu = Vector3::new(1.3, -0.2, 0.05);
        let tau = model.d * nu;
        let (_, nu_dot) = dynamics(&Vector3::zeros(), &nu, &tau, &model);
        assert_relative_eq!(nu_dot.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn surge_decay_matches_linear_solve_oracle() {
        let model = assemble_model(&VesselParams::northern_clipper()).unwrap();
        let eta = Vector3::new(0.0, 0.0, 0.0);
        let nu = Vector3::new(1.0, 0.0, 0.0);
        let (eta_dot, nu_dot) = dynamics(&eta, &nu, &Vector3::zeros(), &model);
        assert_relative_eq!(eta_dot, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-14);
        // Independent route: solve M x = -D nu instead of multiplying M^-1.
        let rhs = -(model.d * nu);
        let x = model.m.lu().solve(&rhs).unwrap();
        assert_relative_eq!(nu_dot, x, epsilon = 1e-14);
    }

    #[test]
    fn dynamics_is_linear_in_tau() {
        let model = assemble_model(&VesselParams::northern_clipper()).unwrap();
        let eta = Vector3::new(3.0, 4.0, 0.9);
        let nu = Vector3::new(0.8, -0.3, 0.02);
        let t1 = Vector3::new(1e5, -2e4, 3e6);
        let t2 = Vector3::new(-4e4, 8e4, -1e6);
        let (a, b) = (2.0, -0.7);
        let (_, combined) = dynamics(&eta, &nu, &(t1 * a + t2 * b), &model);
        let (_, d0) = dynamics(&eta, &nu, &Vector3::zeros(), &model);
        let (_, d1) = dynamics(&eta, &nu, &t1, &model);
        let (_, d2) = dynamics(&eta, &nu, &t2, &model);
        let superposed = d0 + (d1 - d0) * a + (d2 - d0) * b;
        assert_relative_eq!(combined, superposed, epsilon = 1e-10);
    }

    #[test]
    fn damping_dissipates_energy() {
        let model = assemble_model(&VesselParams::northern_clipper()).unwrap();
        let sym = (model.d + model.d.transpose()) * 0.5;
        for k in 0..1000 {
            let a = (k as f64 * 0.317).sin();
            let b = (k as f64 * 1.113).cos();
            let c = (k as f64 * 2.71).sin();
            let nu = Vector3::new(3.0 * a, 2.0 * b, 0.2 * c);
            let power = nu.dot(&(sym * nu));
            assert!(power >= 0.0, "nu = {nu:?}, power = {power}");
        }
    }

    #[test]
    fn pose_stores_wrapped_heading() {
        let p = Pose::new(1.0, 2.0, 5.0 * std::f64::consts::PI);
        assert_relative_eq!(p.psi(), std::f64::consts::PI, epsilon = 1e-12);
    }
}
