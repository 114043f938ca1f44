//! Direct-collocation transcription of the docking optimal-control problem.
//!
//! The continuous problem minimizes a quadratic pose/velocity/effort penalty
//! plus the thruster singularity cost, subject to the vessel dynamics,
//! spatial containment of the safety polygon, thrust saturation, azimuth
//! sectors and slew limits, with the measured state as initial condition.
//! [`transcribe`] turns it into a smooth NLP with analytic first derivatives
//! and a block-structured Hessian model for the SQP solver.

mod grid;
mod layout;
mod transcribe;

pub use grid::{legendre_grid, CollocationGrid, GridError};
pub use layout::{ConstraintLayout, DecisionLayout, NodeTime, StateNode, STATE_DIM};
pub use transcribe::{
    collocate_interval, transcribe, InitialCondition, OcpError, OcpSetup, Trajectory,
    TrajectoryPoint, TranscribedOcp,
};

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::thrust::{singularity_cost, AllocationWeights, ThrusterSpec};
use crate::vessel::wrap_angle;

/// Objective weights. The quadratic blocks act on scaled deviations (see
/// [`VariableScaling`]); the allocation weights parameterize the singularity
/// penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub q_eta: Matrix3<f64>,
    pub q_nu: Matrix3<f64>,
    /// Thrust effort weight, one row/column per thruster.
    pub r_f: DMatrix<f64>,
    pub allocation: AllocationWeights,
}

impl Weights {
    /// Q_eta = diag(1, 1, 4), Q_nu = I, R_f = 0.01 I, rho = 1, eps = 1e-3.
    pub fn default_for(n_thrusters: usize) -> Self {
        Self {
            q_eta: Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0)),
            q_nu: Matrix3::identity(),
            r_f: DMatrix::identity(n_thrusters, n_thrusters) * 0.01,
            allocation: AllocationWeights::default_for(n_thrusters),
        }
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        let sym_psd = |m: &DMatrix<f64>, name: &str| -> Result<(), OcpError> {
            if (m - m.transpose()).amax() > 1e-9 {
                return Err(OcpError::BadWeights(format!("{name} is not symmetric")));
            }
            let eig = m.clone().symmetric_eigenvalues();
            if eig.iter().any(|&l| l < -1e-9) {
                return Err(OcpError::BadWeights(format!(
                    "{name} is not positive semidefinite"
                )));
            }
            Ok(())
        };
        sym_psd(&DMatrix::from_fn(3, 3, |i, j| self.q_eta[(i, j)]), "Q_eta")?;
        sym_psd(&DMatrix::from_fn(3, 3, |i, j| self.q_nu[(i, j)]), "Q_nu")?;
        sym_psd(&self.r_f, "R_f")?;
        Ok(())
    }
}

/// Diagonal variable scaling between physical and solver units. Raw forces
/// are O(1e6 N) and positions O(1e2 m); the solver sees O(1) variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableScaling {
    /// Meters per scaled position unit.
    pub position: f64,
    /// m/s per scaled velocity unit.
    pub velocity: f64,
    /// rad/s per scaled yaw-rate unit.
    pub yaw_rate: f64,
    /// Radians per scaled angle unit (headings and azimuth angles).
    pub angle: f64,
    /// Newtons per scaled force unit, per thruster.
    pub force: Vec<f64>,
}

impl VariableScaling {
    pub fn for_specs(specs: &[ThrusterSpec]) -> Self {
        Self {
            position: 100.0,
            velocity: 1.0,
            yaw_rate: 0.1,
            angle: std::f64::consts::PI,
            force: specs
                .iter()
                .map(|s| s.f_max.abs().max(s.f_min.abs()).max(1.0))
                .collect(),
        }
    }

    /// Per-component state scale for [x, y, psi, u, v, r].
    pub fn state(&self) -> [f64; 6] {
        [
            self.position,
            self.position,
            self.angle,
            self.velocity,
            self.velocity,
            self.yaw_rate,
        ]
    }
}

/// Running cost at one instant: quadratic pose error (heading on the wrapped
/// difference), velocity and thrust-effort penalties, plus the singularity
/// cost of the current azimuth configuration. `alphas` has one entry per
/// thruster.
pub fn stage_cost(
    eta: &Vector3<f64>,
    nu: &Vector3<f64>,
    f: &[f64],
    alphas: &[f64],
    eta_d: &Vector3<f64>,
    weights: &Weights,
    specs: &[ThrusterSpec],
) -> f64 {
    let e = Vector3::new(
        eta[0] - eta_d[0],
        eta[1] - eta_d[1],
        wrap_angle(eta[2] - eta_d[2]),
    );
    let fv = nalgebra::DVector::from_column_slice(f);
    e.dot(&(weights.q_eta * e))
        + nu.dot(&(weights.q_nu * nu))
        + fv.dot(&(&weights.r_f * &fv))
        + singularity_cost(specs, alphas, &weights.allocation)
}
