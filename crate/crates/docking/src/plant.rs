//! Ground-truth simulation plant: classical RK4 on the continuous dynamics
//! with zero-order-hold thrust and rate-limited azimuth motion.
//!
//! The planner treats angles as piecewise constant per interval; the plant
//! slews them at the actuator rate limit instead. That mismatch is the
//! realistic modeling error the receding-horizon feedback has to absorb.

use nalgebra::Vector3;

use crate::thrust::{config_matrix, ThrusterCommand, ThrusterKind, ThrusterSpec};
use crate::vessel::{dynamics, ModelMatrices, Pose, Velocity};

/// One integration substep of the plant trace.
#[derive(Debug, Clone)]
pub struct PlantSample {
    pub t: f64,
    pub pose: Pose,
    pub velocity: Velocity,
    /// Actual (slewed) thruster angles at this time.
    pub alpha: Vec<f64>,
    /// Applied per-thruster forces.
    pub f: Vec<f64>,
}

/// One classical RK4 step of the vessel dynamics under constant tau.
pub fn rk4_step(
    pose: &Pose,
    velocity: &Velocity,
    tau: &Vector3<f64>,
    model: &ModelMatrices,
    dt: f64,
) -> (Pose, Velocity) {
    assert!(dt > 0.0 && dt <= 1.0, "plant step must be in (0, 1] s");
    let eta = pose.to_vector();
    let nu = velocity.to_vector();
    let (eta1, nu1) = rk4_step_raw(&eta, &nu, tau, model, dt);
    (Pose::from_vector(&eta1), Velocity::from_vector(&nu1))
}

pub(crate) fn rk4_step_raw(
    eta: &Vector3<f64>,
    nu: &Vector3<f64>,
    tau: &Vector3<f64>,
    model: &ModelMatrices,
    dt: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    let f = |e: &Vector3<f64>, n: &Vector3<f64>| dynamics(e, n, tau, model);
    let (k1e, k1n) = f(eta, nu);
    let (k2e, k2n) = f(&(eta + k1e * (dt / 2.0)), &(nu + k1n * (dt / 2.0)));
    let (k3e, k3n) = f(&(eta + k2e * (dt / 2.0)), &(nu + k2n * (dt / 2.0)));
    let (k4e, k4n) = f(&(eta + k3e * dt), &(nu + k3n * dt));
    (
        eta + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (dt / 6.0),
        nu + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * (dt / 6.0),
    )
}

/// Move actual angles toward the commanded ones at the per-thruster rate
/// limit over `dt` seconds. Fixed thrusters keep their mounting angle.
fn slew_angles(specs: &[ThrusterSpec], actual: &[f64], commanded: &[f64], dt: f64) -> Vec<f64> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| match spec.kind {
            ThrusterKind::Fixed { alpha } => alpha,
            ThrusterKind::Azimuth { alpha_rate_max, .. } => {
                let max_move = alpha_rate_max * dt;
                actual[i] + (commanded[i] - actual[i]).clamp(-max_move, max_move)
            }
        })
        .collect()
}

/// Integrate one command period. Thrust applies immediately; azimuth angles
/// slew from `previous_alpha` toward the commanded angles. The returned
/// trace has samples at t0, t0 + dt, ..., t0 + duration.
#[allow(clippy::too_many_arguments)]
pub fn simulate_interval(
    pose: &Pose,
    velocity: &Velocity,
    command: &ThrusterCommand,
    previous_alpha: &[f64],
    model: &ModelMatrices,
    specs: &[ThrusterSpec],
    t0: f64,
    duration: f64,
    dt: f64,
) -> Vec<PlantSample> {
    assert_eq!(previous_alpha.len(), specs.len());
    let n_steps = (duration / dt).round() as usize;
    assert!(
        (n_steps as f64 * dt - duration).abs() < 1e-9,
        "duration must tile at dt spacing"
    );

    let mut eta = pose.to_vector();
    let mut nu = velocity.to_vector();
    let mut alpha = previous_alpha.to_vec();
    let mut trace = Vec::with_capacity(n_steps + 1);
    trace.push(PlantSample {
        t: t0,
        pose: Pose::from_vector(&eta),
        velocity: Velocity::from_vector(&nu),
        alpha: alpha.clone(),
        f: command.f.clone(),
    });
    for step in 0..n_steps {
        // Angles held over the substep, then advanced.
        let t = config_matrix(specs, &alpha).expect("slewed angles stay within sectors");
        let fv = nalgebra::DVector::from_column_slice(&command.f);
        let tau = t * fv;
        let (eta1, nu1) = rk4_step_raw(&eta, &nu, &Vector3::new(tau[0], tau[1], tau[2]), model, dt);
        eta = eta1;
        nu = nu1;
        alpha = slew_angles(specs, &alpha, &command.alpha, dt);
        trace.push(PlantSample {
            t: t0 + (step + 1) as f64 * dt,
            pose: Pose::from_vector(&eta),
            velocity: Velocity::from_vector(&nu),
            alpha: alpha.clone(),
            f: command.f.clone(),
        });
    }
    trace
}
