//! Thruster geometry: the configuration matrix T(alpha) mapping per-thruster
//! forces to body-frame surge/sway/yaw, bounds and slew limits, and the
//! singular-configuration penalty
//!
//! ```text
//! rho / (eps + det(T(alpha) W^-1 T(alpha)^T))
//! ```
//!
//! including its exact first and second derivatives with respect to the
//! azimuth angles (needed for gradients and the Hessian model of the OCP).

use nalgebra::{Matrix3, Matrix3xX, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThrustError {
    #[error("thruster {index}: angle {alpha} outside sector [{min}, {max}]")]
    AngleOutOfSector {
        index: usize,
        alpha: f64,
        min: f64,
        max: f64,
    },
    #[error("thruster {index}: force {force} outside [{min}, {max}]")]
    ForceOutOfBounds {
        index: usize,
        force: f64,
        min: f64,
        max: f64,
    },
    #[error("command has {got} entries for {want} thrusters")]
    LengthMismatch { got: usize, want: usize },
    #[error("invalid thruster specification: {0}")]
    BadSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThrusterKind {
    /// Rotating azimuth thruster with a feasible sector and a slew limit.
    Azimuth {
        alpha_min: f64,
        alpha_max: f64,
        alpha_rate_max: f64,
    },
    /// Fixed-direction thruster (e.g. a transverse tunnel thruster).
    Fixed { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrusterSpec {
    pub kind: ThrusterKind,
    /// Body-frame x offset, meters.
    pub lx: f64,
    /// Body-frame y offset, meters.
    pub ly: f64,
    pub f_min: f64,
    pub f_max: f64,
}

impl ThrusterSpec {
    pub fn validate(&self) -> Result<(), ThrustError> {
        if self.f_min > self.f_max {
            return Err(ThrustError::BadSpec(format!(
                "f_min {} > f_max {}",
                self.f_min, self.f_max
            )));
        }
        if let ThrusterKind::Azimuth {
            alpha_min,
            alpha_max,
            alpha_rate_max,
        } = self.kind
        {
            if alpha_min >= alpha_max {
                return Err(ThrustError::BadSpec(format!(
                    "alpha_min {alpha_min} >= alpha_max {alpha_max}"
                )));
            }
            if alpha_rate_max <= 0.0 {
                return Err(ThrustError::BadSpec("alpha_rate_max must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn is_azimuth(&self) -> bool {
        matches!(self.kind, ThrusterKind::Azimuth { .. })
    }

    /// Effective angle for the configuration column.
    fn effective_alpha(&self, alpha: f64) -> Result<f64, ThrustError> {
        match self.kind {
            ThrusterKind::Fixed { alpha } => Ok(alpha),
            ThrusterKind::Azimuth {
                alpha_min,
                alpha_max,
                ..
            } => {
                if alpha < alpha_min || alpha > alpha_max {
                    Err(ThrustError::AngleOutOfSector {
                        index: usize::MAX,
                        alpha,
                        min: alpha_min,
                        max: alpha_max,
                    })
                } else {
                    Ok(alpha)
                }
            }
        }
    }
}

/// (cos, sin) with quarter turns snapped to exact values, so that fixed
/// transverse thrusters produce bit-exact configuration columns.
fn unit_direction(alpha: f64) -> (f64, f64) {
    let quarter = std::f64::consts::FRAC_PI_2;
    for k in -4i32..=4 {
        if alpha == k as f64 * quarter {
            return match k.rem_euclid(4) {
                0 => (1.0, 0.0),
                1 => (0.0, 1.0),
                2 => (-1.0, 0.0),
                _ => (0.0, -1.0),
            };
        }
    }
    (alpha.cos(), alpha.sin())
}

/// Penalty weights of the singular-configuration cost.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationWeights {
    pub rho: f64,
    pub epsilon: f64,
    /// Diagonal of W, one positive entry per thruster.
    pub w_diag: Vec<f64>,
}

impl AllocationWeights {
    pub fn new(rho: f64, epsilon: f64, w_diag: Vec<f64>) -> Result<Self, ThrustError> {
        if rho <= 0.0 || epsilon <= 0.0 || w_diag.iter().any(|&w| w <= 0.0) {
            return Err(ThrustError::BadSpec(
                "allocation weights must be strictly positive".into(),
            ));
        }
        Ok(Self {
            rho,
            epsilon,
            w_diag,
        })
    }

    /// rho = 1, eps = 1e-3, W = I.
    pub fn default_for(n_thrusters: usize) -> Self {
        Self {
            rho: 1.0,
            epsilon: 1e-3,
            w_diag: vec![1.0; n_thrusters],
        }
    }
}

/// Commanded angles and forces, one entry per thruster (fixed thrusters carry
/// their fixed angle).
#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterCommand {
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
}

impl ThrusterCommand {
    pub fn validate(&self, specs: &[ThrusterSpec]) -> Result<(), ThrustError> {
        if self.alpha.len() != specs.len() || self.f.len() != specs.len() {
            return Err(ThrustError::LengthMismatch {
                got: self.alpha.len().min(self.f.len()),
                want: specs.len(),
            });
        }
        for (i, spec) in specs.iter().enumerate() {
            spec.effective_alpha(self.alpha[i]).map_err(|e| match e {
                ThrustError::AngleOutOfSector {
                    alpha, min, max, ..
                } => ThrustError::AngleOutOfSector {
                    index: i,
                    alpha,
                    min,
                    max,
                },
                other => other,
            })?;
            if self.f[i] < spec.f_min - 1e-9 || self.f[i] > spec.f_max + 1e-9 {
                return Err(ThrustError::ForceOutOfBounds {
                    index: i,
                    force: self.f[i],
                    min: spec.f_min,
                    max: spec.f_max,
                });
            }
        }
        Ok(())
    }
}

/// Configuration column of a single thruster:
/// `[cos a, sin a, lx sin a - ly cos a]` per unit force.
pub fn config_column(spec: &ThrusterSpec, alpha: f64) -> Result<Vector3<f64>, ThrustError> {
    let a = spec.effective_alpha(alpha)?;
    let (c, s) = match spec.kind {
        ThrusterKind::Fixed { .. } => unit_direction(a),
        ThrusterKind::Azimuth { .. } => (a.cos(), a.sin()),
    };
    Ok(Vector3::new(c, s, spec.lx * s - spec.ly * c))
}

/// Configuration column without the sector check; the singularity penalty
/// and the OCP evaluators must stay total functions of alpha (sectors are
/// enforced as variable bounds, not in the evaluators).
pub(crate) fn config_column_unchecked(spec: &ThrusterSpec, alpha: f64) -> Vector3<f64> {
    let (c, s) = match spec.kind {
        ThrusterKind::Fixed { alpha } => unit_direction(alpha),
        ThrusterKind::Azimuth { .. } => (alpha.cos(), alpha.sin()),
    };
    Vector3::new(c, s, spec.lx * s - spec.ly * c)
}

/// d/dalpha of [`config_column`] (zero column for fixed thrusters).
pub fn config_column_deriv(spec: &ThrusterSpec, alpha: f64) -> Vector3<f64> {
    match spec.kind {
        ThrusterKind::Fixed { .. } => Vector3::zeros(),
        ThrusterKind::Azimuth { .. } => {
            let (s, c) = alpha.sin_cos();
            Vector3::new(-s, c, spec.lx * c + spec.ly * s)
        }
    }
}

/// Full 3 x n configuration matrix; `alphas` carries one entry per thruster
/// and fixed thrusters ignore theirs.
pub fn config_matrix(specs: &[ThrusterSpec], alphas: &[f64]) -> Result<Matrix3xX<f64>, ThrustError> {
    if alphas.len() != specs.len() {
        return Err(ThrustError::LengthMismatch {
            got: alphas.len(),
            want: specs.len(),
        });
    }
    let mut t = Matrix3xX::zeros(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let col = config_column(spec, alphas[i]).map_err(|e| match e {
            ThrustError::AngleOutOfSector {
                alpha, min, max, ..
            } => ThrustError::AngleOutOfSector {
                index: i,
                alpha,
                min,
                max,
            },
            other => other,
        })?;
        t.set_column(i, &col);
    }
    Ok(t)
}

/// Generalized body-frame force `tau = T(alpha) f` of a validated command.
pub fn generalized_force(
    specs: &[ThrusterSpec],
    command: &ThrusterCommand,
) -> Result<Vector3<f64>, ThrustError> {
    command.validate(specs)?;
    let t = config_matrix(specs, &command.alpha)?;
    let f = nalgebra::DVector::from_vec(command.f.clone());
    Ok(t * f)
}

/// Closed-form determinant of a symmetric 3x3 matrix.
fn det3(m: &Matrix3<f64>) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Adjugate of a 3x3 matrix via Cayley-Hamilton.
fn adjugate3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let tr = m.trace();
    let m2 = m * m;
    let tr2 = m2.trace();
    m2 - m * tr + Matrix3::identity() * (0.5 * (tr * tr - tr2))
}

/// Directional derivative of the adjugate along a symmetric perturbation `a`.
fn adjugate3_deriv(m: &Matrix3<f64>, a: &Matrix3<f64>) -> Matrix3<f64> {
    let tr_m = m.trace();
    let tr_a = a.trace();
    let ma = m * a;
    a * m + ma - m * tr_a - a * tr_m + Matrix3::identity() * (tr_m * tr_a - ma.trace())
}

/// Gram matrix `T W^-1 T^T`.
fn gram_matrix(
    specs: &[ThrusterSpec],
    alphas: &[f64],
    weights: &AllocationWeights,
) -> Matrix3<f64> {
    assert_eq!(alphas.len(), specs.len());
    assert_eq!(weights.w_diag.len(), specs.len());
    let mut m = Matrix3::zeros();
    for (i, spec) in specs.iter().enumerate() {
        let col = config_column_unchecked(spec, alphas[i]);
        let w = weights.w_diag[i];
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] += col[r] * col[c] / w;
            }
        }
    }
    m
}

/// Rank-deficiency penalty `rho / (eps + det(T W^-1 T^T))`.
///
/// Strictly positive and bounded above by `rho / eps` (reached exactly when
/// the configuration loses rank). Total in alpha: sector limits are bound
/// constraints elsewhere, not a domain restriction here.
pub fn singularity_cost(
    specs: &[ThrusterSpec],
    alphas: &[f64],
    weights: &AllocationWeights,
) -> f64 {
    let m = gram_matrix(specs, alphas, weights);
    weights.rho / (weights.epsilon + det3(&m))
}

/// Penalty value together with exact gradient and Hessian with respect to the
/// azimuth angles (in spec order, skipping fixed thrusters).
pub fn singularity_cost_derivs(
    specs: &[ThrusterSpec],
    alphas: &[f64],
    weights: &AllocationWeights,
) -> (f64, Vec<f64>, nalgebra::DMatrix<f64>) {
    let azimuths: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].is_azimuth()).collect();
    let na = azimuths.len();
    let m = gram_matrix(specs, alphas, weights);
    let adj = adjugate3(&m);
    let g = det3(&m);
    let denom = weights.epsilon + g;
    let value = weights.rho / denom;

    // dM/dalpha_i = (T_i' T_i^T + T_i T_i'^T) / w_i
    let mut dm = Vec::with_capacity(na);
    let mut t_cols = Vec::with_capacity(na);
    let mut t_dcols = Vec::with_capacity(na);
    for &i in &azimuths {
        let ti = config_column_unchecked(&specs[i], alphas[i]);
        let di = config_column_deriv(&specs[i], alphas[i]);
        let w = weights.w_diag[i];
        dm.push((di * ti.transpose() + ti * di.transpose()) / w);
        t_cols.push((ti, w));
        t_dcols.push(di);
    }

    let det_grad: Vec<f64> = dm.iter().map(|a| (adj * a).trace()).collect();
    let mut grad = vec![0.0; na];
    for k in 0..na {
        grad[k] = -weights.rho * det_grad[k] / (denom * denom);
    }

    let mut det_hess = nalgebra::DMatrix::zeros(na, na);
    for j in 0..na {
        let dadj = adjugate3_deriv(&m, &dm[j]);
        for i in 0..na {
            let mut h = (dadj * dm[i]).trace();
            if i == j {
                // d^2 M / dalpha_i^2 = 2 (T_i' T_i'^T - T_i T_i^T) / w_i
                let (ti, w) = &t_cols[i];
                let di = &t_dcols[i];
                let d2m = (di * di.transpose() - ti * ti.transpose()) * (2.0 / w);
                h += (adj * d2m).trace();
            }
            det_hess[(i, j)] = h;
        }
    }
    let mut hess = nalgebra::DMatrix::zeros(na, na);
    for i in 0..na {
        for j in 0..na {
            hess[(i, j)] = weights.rho
                * (2.0 * det_grad[i] * det_grad[j] / (denom * denom * denom)
                    - det_hess[(i, j)] / (denom * denom));
        }
    }
    (value, grad, hess)
}

/// Force bounds derived from the dry weight: azimuth thrusters push up to
/// 1/30 of m*g (forward only), the tunnel thruster 1/60 in either direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustLimits {
    pub azimuth_max: f64,
    pub tunnel_max: f64,
}

pub fn derive_thrust_limits(mass: f64, gravity: f64) -> ThrustLimits {
    let weight = mass * gravity;
    ThrustLimits {
        azimuth_max: weight / 30.0,
        tunnel_max: weight / 60.0,
    }
}

/// Slew-rate bound from a full-revolution turnaround time.
pub fn slew_limit(turnaround_seconds: f64) -> f64 {
    assert!(turnaround_seconds > 0.0);
    2.0 * std::f64::consts::PI / turnaround_seconds
}

/// Two stern azimuth thrusters plus one bow tunnel thruster, with sector,
/// slew and force limits of the supply-vessel preset.
pub fn northern_clipper_thrusters(mass: f64, gravity: f64) -> Vec<ThrusterSpec> {
    let limits = derive_thrust_limits(mass, gravity);
    let sector = 170.0 * std::f64::consts::PI / 180.0;
    let rate = slew_limit(30.0);
    let azimuth = |ly: f64| ThrusterSpec {
        kind: ThrusterKind::Azimuth {
            alpha_min: -sector,
            alpha_max: sector,
            alpha_rate_max: rate,
        },
        lx: -35.0,
        ly,
        f_min: 0.0,
        f_max: limits.azimuth_max,
    };
    vec![
        azimuth(7.0),
        azimuth(-7.0),
        ThrusterSpec {
            kind: ThrusterKind::Fixed {
                alpha: std::f64::consts::FRAC_PI_2,
            },
            lx: 35.0,
            ly: 0.0,
            f_min: -limits.tunnel_max,
            f_max: limits.tunnel_max,
        },
    ]
}

/// Expand azimuth-only angles into a full per-thruster vector, filling fixed
/// thrusters with their fixed angle.
pub fn full_alphas(specs: &[ThrusterSpec], azimuth_alphas: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(specs.len());
    let mut k = 0;
    for spec in specs {
        match spec.kind {
            ThrusterKind::Azimuth { .. } => {
                out.push(azimuth_alphas[k]);
                k += 1;
            }
            ThrusterKind::Fixed { alpha } => out.push(alpha),
        }
    }
    debug_assert_eq!(k, azimuth_alphas.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn specs() -> Vec<ThrusterSpec> {
        northern_clipper_thrusters(6.0e6, 9.8)
    }

    #[test]
    fn config_columns_match_hand_evaluation() {
        let s = specs();
        // Azimuth 1 at (lx, ly) = (-35, 7).
        assert_eq!(
            config_column(&s[0], 0.0).unwrap(),
            Vector3::new(1.0, 0.0, -7.0)
        );
        let quarter = config_column(&s[0], std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(quarter, Vector3::new(0.0, 1.0, -35.0), epsilon = 1e-12);
        // Tunnel thruster column is exact: [0, 1, lx].
        assert_eq!(
            config_column(&s[2], 12345.0).unwrap(),
            Vector3::new(0.0, 1.0, 35.0)
        );
    }

    #[test]
    fn out_of_sector_angle_is_rejected() {
        let s = specs();
        assert!(config_column(&s[0], 3.1).is_err());
        assert!(config_column(&s[0], -3.1).is_err());
    }

    #[test]
    fn config_matrix_layout() {
        let s = specs();
        let t = config_matrix(&s, &[0.0, 0.0, 0.0]).unwrap();
        let expect = [
            [1.0, 1.0, 0.0], //
            [0.0, 0.0, 1.0],
            [-7.0, 7.0, 35.0],
        ];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(t[(r, c)], expect[r][c], "entry ({r}, {c})");
            }
        }

        let empty = config_matrix(&[], &[]).unwrap();
        assert_eq!(empty.ncols(), 0);

        let single = config_matrix(&s[..1], &[0.4]).unwrap();
        assert_eq!(single.column(0), config_column(&s[0], 0.4).unwrap().column(0));
    }

    #[test]
    fn generalized_force_examples() {
        let s = specs();
        let zero = ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![0.0; 3],
        };
        assert_eq!(generalized_force(&s, &zero).unwrap(), Vector3::zeros());

        let ahead = ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![1e5, 1e5, 0.0],
        };
        assert_relative_eq!(
            generalized_force(&s, &ahead).unwrap(),
            Vector3::new(2e5, 0.0, 0.0),
            epsilon = 1e-9
        );

        // Pure differential moment needs signed azimuth thrust, so allow
        // reverse force on a copy of the layout.
        let mut signed = s.clone();
        for spec in &mut signed[..2] {
            spec.f_min = -spec.f_max;
        }
        let twist = ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![1e5, -1e5, 0.0],
        };
        assert_relative_eq!(
            generalized_force(&signed, &twist).unwrap(),
            Vector3::new(0.0, 0.0, -1.4e6),
            epsilon = 1e-9
        );
    }

    #[test]
    fn command_bounds_are_validated_not_clamped() {
        let s = specs();
        let too_much = ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![3e6, 0.0, 0.0],
        };
        assert!(matches!(
            too_much.validate(&s),
            Err(ThrustError::ForceOutOfBounds { index: 0, .. })
        ));
        // Azimuth thrusters cannot pull backwards; the tunnel is signed.
        let reverse = ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![-1.0, 0.0, -9.8e5],
        };
        assert!(matches!(
            reverse.validate(&s),
            Err(ThrustError::ForceOutOfBounds { index: 0, .. })
        ));
    }

    #[test]
    fn singularity_cost_examples() {
        let s = specs();
        let w = AllocationWeights::default_for(3);
        let alphas = [0.0, 0.0, std::f64::consts::FRAC_PI_2];

        // det(T T^T) for the layout at alpha = 0 is exactly 196.
        let m = gram_matrix(&s, &alphas, &w);
        assert_relative_eq!(det3(&m), 196.0, epsilon = 1e-9);
        let cost = singularity_cost(&s, &alphas, &w);
        assert_relative_eq!(cost, w.rho / (w.epsilon + 196.0), epsilon = 1e-12);

        // All force directions aligned with sway: rank deficiency, cost rho/eps.
        let aligned = [
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
        ];
        let cost = singularity_cost(&s, &aligned, &w);
        assert_eq!(cost, w.rho / w.epsilon);

        // Doubling W: verified against an independent determinant oracle.
        let w2 = AllocationWeights::new(1.0, 1e-3, vec![2.0; 3]).unwrap();
        let t = config_matrix(&s, &alphas).unwrap();
        let w2_inv = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.5, 0.5, 0.5,
        ]));
        let oracle = (&t * w2_inv * t.transpose()).determinant();
        let cost = singularity_cost(&s, &alphas, &w2);
        assert_relative_eq!(cost, w2.rho / (w2.epsilon + oracle), epsilon = 1e-10);
    }

    #[test]
    fn singularity_cost_is_bounded_and_positive() {
        let s = specs();
        let w = AllocationWeights::default_for(3);
        for k in 0..200 {
            let a1 = ((k as f64) * 0.37).sin() * 2.9;
            let a2 = ((k as f64) * 0.83).cos() * 2.9;
            let cost =
                singularity_cost(&s, &[a1, a2, std::f64::consts::FRAC_PI_2], &w);
            assert!(cost > 0.0);
            assert!(cost <= w.rho / w.epsilon + 1e-12);
        }
    }

    #[test]
    fn penalty_derivatives_match_finite_differences() {
        let s = specs();
        let w = AllocationWeights::new(2.5, 1e-2, vec![1.0, 1.3, 0.8]).unwrap();
        let h = 1e-6;
        for k in 0..20 {
            let a1 = ((k as f64) * 0.61).sin() * 2.5;
            let a2 = ((k as f64) * 1.13).cos() * 2.5;
            let alphas = vec![a1, a2, std::f64::consts::FRAC_PI_2];
            let (val, grad, hess) = singularity_cost_derivs(&s, &alphas, &w);
            assert_relative_eq!(
                val,
                singularity_cost(&s, &alphas, &w),
                epsilon = 1e-14
            );
            for i in 0..2 {
                let mut ap = alphas.clone();
                ap[i] += h;
                let mut am = alphas.clone();
                am[i] -= h;
                let fd = (singularity_cost(&s, &ap, &w)
                    - singularity_cost(&s, &am, &w))
                    / (2.0 * h);
                assert_relative_eq!(grad[i], fd, max_relative = 1e-5, epsilon = 1e-9);

                for j in 0..2 {
                    let (_, gp, _) = singularity_cost_derivs(&s, &ap, &w);
                    let (_, gm, _) = singularity_cost_derivs(&s, &am, &w);
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert_relative_eq!(hess[(j, i)], fd2, max_relative = 1e-4, epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn penalty_is_continuous_under_small_perturbations() {
        let s = specs();
        let w = AllocationWeights::default_for(3);
        let delta = 1e-8;
        for k in 0..100 {
            let a1 = ((k as f64) * 0.7).sin() * 2.8;
            let a2 = ((k as f64) * 1.7).cos() * 2.8;
            let base =
                singularity_cost(&s, &[a1, a2, std::f64::consts::FRAC_PI_2], &w);
            let moved = singularity_cost(
                &s,
                &[a1 + delta, a2 - delta, std::f64::consts::FRAC_PI_2],
                &w,
            );
            assert!((base - moved).abs() < 1e-3, "jump at ({a1}, {a2})");
        }
    }

    #[test]
    fn relabeling_identical_thrusters_preserves_cost() {
        // Two identical azimuths: swapping their angles must not change the
        // penalty when W = I.
        let twin = ThrusterSpec {
            kind: ThrusterKind::Azimuth {
                alpha_min: -3.0,
                alpha_max: 3.0,
                alpha_rate_max: 0.2,
            },
            lx: -30.0,
            ly: 0.0,
            f_min: 0.0,
            f_max: 1e6,
        };
        let pair = vec![twin, twin];
        let w = AllocationWeights::default_for(2);
        for k in 0..50 {
            let a1 = ((k as f64) * 0.9).sin() * 2.0;
            let a2 = ((k as f64) * 1.2).cos() * 2.0;
            let c12 = singularity_cost(&pair, &[a1, a2], &w);
            let c21 = singularity_cost(&pair, &[a2, a1], &w);
            assert_relative_eq!(c12, c21, epsilon = 1e-12);
        }
    }

    #[test]
    fn force_parts_of_columns_are_unit_norm() {
        let s = specs();
        for k in 0..100 {
            let a = ((k as f64) * 0.41).sin() * 2.9;
            for spec in &s {
                let alpha = match spec.kind {
                    ThrusterKind::Azimuth { .. } => a,
                    ThrusterKind::Fixed { alpha } => alpha,
                };
                let col = config_column(spec, alpha).unwrap();
                assert_relative_eq!(
                    (col[0] * col[0] + col[1] * col[1]).sqrt(),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn generalized_force_is_linear_in_f() {
        let s = specs();
        let alpha = vec![0.7, -0.3, std::f64::consts::FRAC_PI_2];
        let f1 = vec![4e5, 2e5, -1e5];
        let f2 = vec![1e5, 9e5, 5e5];
        let (a, b) = (0.3, 0.6);
        let combo = ThrusterCommand {
            alpha: alpha.clone(),
            f: f1.iter().zip(f2.iter()).map(|(x, y)| a * x + b * y).collect(),
        };
        let c1 = ThrusterCommand {
            alpha: alpha.clone(),
            f: f1,
        };
        let c2 = ThrusterCommand { alpha, f: f2 };
        let got = generalized_force(&s, &combo).unwrap();
        let want = generalized_force(&s, &c1).unwrap() * a + generalized_force(&s, &c2).unwrap() * b;
        assert_relative_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn thrust_limits_from_dry_weight() {
        let lim = derive_thrust_limits(6e6, 9.8);
        assert_relative_eq!(lim.azimuth_max, 1.96e6, epsilon = 1e-6);
        assert_relative_eq!(lim.tunnel_max, 9.8e5, epsilon = 1e-6);
        let zero = derive_thrust_limits(0.0, 9.8);
        assert_eq!(zero.azimuth_max, 0.0);
        assert_eq!(zero.tunnel_max, 0.0);
    }

    #[test]
    fn slew_limit_examples() {
        assert_relative_eq!(slew_limit(30.0), 0.20943951023931953, epsilon = 1e-12);
        assert_relative_eq!(slew_limit(2.0 * std::f64::consts::PI), 1.0, epsilon = 1e-15);
        assert_relative_eq!(slew_limit(std::f64::consts::PI), 2.0, epsilon = 1e-15);
    }
}
