//! Receding-horizon control: solve the docking problem from the measured
//! state, apply the first interval's command, shift the solution one
//! interval and repeat.


use sqp::{SolveResult, SolveStatus, SolverSettings, WarmStart};

use crate::geometry::containment_residuals;
use crate::ocp::{
    transcribe, ConstraintLayout, DecisionLayout, InitialCondition, NodeTime, OcpSetup,
    Trajectory, TranscribedOcp, STATE_DIM,
};
use crate::plant::{simulate_interval, PlantSample};
use crate::thrust::{ThrusterCommand, ThrusterKind};
use crate::vessel::{wrap_angle, Pose, Velocity};

/// Horizon discretization parameters. The replan period equals one
/// collocation interval so the warm-start shift is exact.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub horizon: f64,
    pub n_intervals: usize,
    pub degree: usize,
    pub replan_period: f64,
    pub solver: SolverSettings,
}

impl MpcConfig {
    pub fn new(horizon: f64, n_intervals: usize, degree: usize) -> Self {
        Self {
            horizon,
            n_intervals,
            degree,
            replan_period: horizon / n_intervals as f64,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let h = self.horizon / self.n_intervals as f64;
        if (self.replan_period - h).abs() > 1e-9 {
            return Err(format!(
                "replan period {} must equal horizon/intervals = {}",
                self.replan_period, h
            ));
        }
        Ok(())
    }
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self::new(300.0, 30, 3)
    }
}

/// Pose/heading/speed thresholds that count as "docked".
#[derive(Debug, Clone, Copy)]
pub struct DockingTolerance {
    /// Meters.
    pub position: f64,
    /// Radians.
    pub heading: f64,
    /// m/s.
    pub speed: f64,
}

impl Default for DockingTolerance {
    fn default() -> Self {
        Self {
            position: 1.0,
            heading: 2.0_f64.to_radians(),
            speed: 0.05,
        }
    }
}

/// Measured plant state handed to the planner.
#[derive(Debug, Clone)]
pub struct StartState {
    pub pose: Pose,
    pub velocity: Velocity,
    /// Actual per-thruster angles.
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReplanRecord {
    pub t: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub qp_iterations: usize,
    pub kkt_residual: f64,
    pub wall_time: std::time::Duration,
    pub objective: f64,
    pub degraded: bool,
    pub command: ThrusterCommand,
    pub predicted: Trajectory,
}

/// One plant sample decorated with the commanded thrust and the spatial
/// clearance of the safety polygon.
#[derive(Debug, Clone)]
pub struct LogSample {
    pub plant: PlantSample,
    pub command: ThrusterCommand,
    /// Minimum containment residual in meters; `None` in open water.
    pub min_residual: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ClosedLoopLog {
    pub samples: Vec<LogSample>,
    pub replans: Vec<ReplanRecord>,
    pub docked: bool,
}

pub struct PlanOutcome {
    pub result: SolveResult,
    pub command: ThrusterCommand,
    pub predicted: Trajectory,
    pub degraded: bool,
    pub ocp: TranscribedOcp,
}

/// The receding-horizon controller: problem setup plus solver and loop
/// parameters.
pub struct Mpc {
    pub setup: OcpSetup,
    pub solver: SolverSettings,
    pub docking: DockingTolerance,
    /// Plant integration step, seconds.
    pub plant_dt: f64,
}

impl Mpc {
    pub fn new(setup: OcpSetup, solver: SolverSettings) -> Self {
        Self {
            setup,
            solver,
            docking: DockingTolerance::default(),
            plant_dt: 0.1,
        }
    }

    pub fn layouts(&self) -> (DecisionLayout, ConstraintLayout) {
        let n_azimuth = self
            .setup
            .specs
            .iter()
            .filter(|s| s.is_azimuth())
            .count();
        let layout = DecisionLayout {
            n_intervals: self.setup.n_intervals,
            degree: self.setup.grid.degree,
            n_thrusters: self.setup.specs.len(),
            n_azimuth,
        };
        let cons = ConstraintLayout {
            n_intervals: self.setup.n_intervals,
            degree: self.setup.grid.degree,
            n_azimuth,
            n_region_rows: self.setup.region.as_ref().map_or(0, |r| r.len()),
            n_safety_vertices: self.setup.safety_vertices.len(),
        };
        (layout, cons)
    }

    /// Transcribe the horizon anchored at a measured state. `prev_command`
    /// supplies the azimuth angles the first interval is rate-limited from.
    pub fn transcribe_at(
        &self,
        pose: &Pose,
        velocity: &Velocity,
        prev_command: &ThrusterCommand,
    ) -> TranscribedOcp {
        let az_alpha: Vec<f64> = self
            .setup
            .specs
            .iter()
            .zip(prev_command.alpha.iter())
            .filter(|(s, _)| s.is_azimuth())
            .map(|(_, &a)| a)
            .collect();
        let init = InitialCondition {
            eta: pose.to_vector(),
            nu: velocity.to_vector(),
            alpha: az_alpha,
        };
        transcribe(&self.setup, &init).expect("validated setup transcribes")
    }

    /// Solve the horizon from the measured state. On solver failure the
    /// previous command is held and the outcome is flagged degraded.
    pub fn plan(
        &self,
        pose: &Pose,
        velocity: &Velocity,
        prev_command: &ThrusterCommand,
        warm: Option<&WarmStart>,
    ) -> PlanOutcome {
        let ocp = self.transcribe_at(pose, velocity, prev_command);
        let result = sqp::solve(&ocp.nlp, &self.solver, warm);
        // A replan that ran out of iterations just shy of the tolerance is
        // still a usable plan; only genuinely unconverged solves hold the
        // previous command.
        let usable = result.status == SolveStatus::Converged
            || result.stats.kkt_residual <= 100.0 * self.solver.kkt_tolerance;
        let (command, predicted, degraded) = if usable {
            let mut cmd = ocp.first_command(&result.x).expect("dimensions match");
            self.clamp_command(&mut cmd);
            let predicted = ocp.extract_trajectory(&result.x).expect("dimensions match");
            (cmd, predicted, false)
        } else {
            (prev_command.clone(), Trajectory::default(), true)
        };
        PlanOutcome {
            result,
            command,
            predicted,
            degraded,
            ocp,
        }
    }

    /// Interior-point iterates can overshoot bounds by the subproblem
    /// tolerance; commands are snapped back inside.
    fn clamp_command(&self, cmd: &mut ThrusterCommand) {
        for (i, spec) in self.setup.specs.iter().enumerate() {
            cmd.f[i] = cmd.f[i].clamp(spec.f_min, spec.f_max);
            if let ThrusterKind::Azimuth {
                alpha_min,
                alpha_max,
                ..
            } = spec.kind
            {
                cmd.alpha[i] = cmd.alpha[i].clamp(alpha_min, alpha_max);
            }
        }
    }

    fn min_residual(&self, pose: &Pose) -> Option<f64> {
        self.setup.region.as_ref().map(|region| {
            containment_residuals(region, pose, &self.setup.safety_vertices)
                .iter()
                .fold(f64::INFINITY, |acc, &r| acc.min(r))
        })
    }

    fn is_docked(&self, pose: &Pose, velocity: &Velocity) -> bool {
        let dx = pose.x - self.setup.eta_d[0];
        let dy = pose.y - self.setup.eta_d[1];
        let dpsi = wrap_angle(pose.psi() - self.setup.eta_d[2]);
        (dx * dx + dy * dy).sqrt() <= self.docking.position
            && dpsi.abs() <= self.docking.heading
            && velocity.speed() <= self.docking.speed
    }

    /// Closed loop: plan, hold the first command for one replan period on
    /// the plant, shift the solution as the next warm start. Terminates
    /// early with the docked flag after three consecutive in-tolerance
    /// replan checks.
    pub fn run_closed_loop(&self, start: &StartState, duration: f64) -> ClosedLoopLog {
        let replan = self.setup.grid.interval;
        let n_steps = (duration / replan).round() as usize;
        assert!(
            (n_steps as f64 * replan - duration).abs() < 1e-6,
            "duration must be a multiple of the replan period"
        );
        let (layout, cons) = self.layouts();

        let mut pose = start.pose;
        let mut velocity = start.velocity;
        let mut actual_alpha = start.alpha.clone();
        let mut prev_command = ThrusterCommand {
            alpha: start.alpha.clone(),
            f: vec![0.0; self.setup.specs.len()],
        };
        let mut warm: Option<WarmStart> = None;
        let mut log = ClosedLoopLog::default();
        let mut consecutive_docked = 0;

        for step in 0..n_steps {
            let t = step as f64 * replan;
            let outcome = self.plan(&pose, &velocity, &prev_command, warm.as_ref());
            warm = if outcome.degraded {
                None
            } else {
                Some(shift_warm_start(
                    &layout,
                    &cons,
                    &outcome.result.warm_start(),
                ))
            };
            let objective = (outcome.ocp.nlp.objective)(&outcome.result.x);
            log.replans.push(ReplanRecord {
                t,
                status: outcome.result.status,
                iterations: outcome.result.stats.iterations,
                qp_iterations: outcome.result.stats.qp_iterations,
                kkt_residual: outcome.result.stats.kkt_residual,
                wall_time: outcome.result.stats.wall_time,
                objective,
                degraded: outcome.degraded,
                command: outcome.command.clone(),
                predicted: outcome.predicted.clone(),
            });

            let trace = simulate_interval(
                &pose,
                &velocity,
                &outcome.command,
                &actual_alpha,
                &self.setup.model,
                &self.setup.specs,
                t,
                replan,
                self.plant_dt,
            );
            let skip = usize::from(step > 0);
            for s in trace.iter().skip(skip) {
                log.samples.push(LogSample {
                    plant: s.clone(),
                    command: outcome.command.clone(),
                    min_residual: self.min_residual(&s.pose),
                });
            }
            let last = trace.last().expect("nonempty trace");
            pose = last.pose;
            velocity = last.velocity;
            actual_alpha = last.alpha.clone();
            prev_command = outcome.command;

            if self.is_docked(&pose, &velocity) {
                consecutive_docked += 1;
            } else {
                consecutive_docked = 0;
            }
            if consecutive_docked >= 3 {
                log.docked = true;
                break;
            }
        }
        log
    }
}

fn node_index(degree: usize, time: NodeTime) -> usize {
    match time {
        NodeTime::Boundary(0) => 0,
        NodeTime::Boundary(k) => 1 + (k - 1) * (degree + 1) + degree,
        NodeTime::Collocation(k, j) => 1 + k * (degree + 1) + (j - 1),
    }
}

/// Shift a solution one interval to seed the next solve: interval blocks
/// move left by one, the last interval is duplicated (its states pinned to
/// the old terminal boundary state), and all multipliers move with their
/// rows.
pub fn shift_warm_start(
    layout: &DecisionLayout,
    cons: &ConstraintLayout,
    prev: &WarmStart,
) -> WarmStart {
    let n = layout.n_intervals;
    let d = layout.degree;
    let dim = layout.dim();
    assert_eq!(prev.x.len(), dim, "warm start dimension mismatch");

    // Variable source map.
    let mut var_src: Vec<usize> = (0..dim).collect();
    let period = layout.boundary(1) - layout.boundary(0);
    for k in 0..n.saturating_sub(1) {
        let dst = layout.boundary(k);
        let src = layout.boundary(k + 1);
        for off in 0..period {
            var_src[dst + off] = src + off;
        }
    }
    // Duplicated last interval: states pinned to the old terminal boundary,
    // controls kept from the old last interval (identity).
    let last = n - 1;
    for c in 0..STATE_DIM {
        var_src[layout.boundary(last) + c] = layout.boundary(n) + c;
        for j in 1..=d {
            var_src[layout.colloc(last, j) + c] = layout.boundary(n) + c;
        }
    }

    // Equality-row source map.
    let mut eq_src: Vec<usize> = (0..cons.n_eq()).collect();
    for k in 0..n.saturating_sub(1) {
        for j in 1..=d {
            let dst = cons.defect_rows(k, j);
            let src = cons.defect_rows(k + 1, j);
            for (a, b) in dst.zip(src) {
                eq_src[a] = b;
            }
        }
        let dst = cons.continuity_rows(k);
        let src = cons.continuity_rows(k + 1);
        for (a, b) in dst.zip(src) {
            eq_src[a] = b;
        }
    }

    // Inequality-row source map: spatial rows shift by node, slew rows by
    // interval; the vacated last slots duplicate the old last ones.
    let mut ineq_src: Vec<usize> = (0..cons.n_ineq()).collect();
    if cons.rows_per_node() > 0 {
        let nodes = layout.state_nodes();
        // The initial boundary state carries no containment rows.
        for node in nodes.iter().skip(1) {
            let dst_idx = node_index(d, node.time_index) - 1;
            let src_time = match node.time_index {
                NodeTime::Boundary(k) => NodeTime::Boundary((k + 1).min(n)),
                NodeTime::Collocation(k, j) => {
                    if k + 1 < n {
                        NodeTime::Collocation(k + 1, j)
                    } else {
                        NodeTime::Boundary(n)
                    }
                }
            };
            let src_idx = node_index(d, src_time) - 1;
            let dst = cons.spatial_rows(dst_idx);
            let src = cons.spatial_rows(src_idx);
            for (a, b) in dst.zip(src) {
                ineq_src[a] = b;
            }
        }
    }
    for k in 0..n {
        let src_k = (k + 1).min(n - 1);
        for a in 0..cons.n_azimuth {
            let dst = cons.slew_rows(k, a);
            let src = cons.slew_rows(src_k, a);
            for (p, q) in dst.zip(src) {
                ineq_src[p] = q;
            }
        }
    }

    let x = var_src.iter().map(|&s| prev.x[s]).collect();
    let y_eq = eq_src.iter().map(|&s| prev.y_eq[s]).collect();
    let z_ineq = ineq_src.iter().map(|&s| prev.z_ineq[s]).collect();
    let mut z_bounds = vec![0.0; 2 * dim];
    for (i, &s) in var_src.iter().enumerate() {
        z_bounds[2 * i] = prev.z_bounds[2 * s];
        z_bounds[2 * i + 1] = prev.z_bounds[2 * s + 1];
    }
    WarmStart {
        x,
        y_eq,
        z_ineq,
        z_bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;
    use crate::ocp::{legendre_grid, Weights};
    use crate::thrust::northern_clipper_thrusters;
    use crate::vessel::{assemble_model, VesselParams};
    use approx::assert_relative_eq;
    use nalgebra::{Vector2, Vector3};

    fn mpc(n_intervals: usize, degree: usize, with_region: bool) -> Mpc {
        let params = VesselParams::northern_clipper();
        let model = assemble_model(&params).unwrap();
        let specs = northern_clipper_thrusters(params.mass, params.gravity);
        let safety = params
            .hull_polygon()
            .unwrap()
            .dilate(0.1)
            .unwrap()
            .vertices()
            .to_vec();
        let region = with_region.then(|| {
            ConvexPolygon::new(vec![
                Vector2::new(500.0, 500.0),
                Vector2::new(-500.0, 500.0),
                Vector2::new(-500.0, -500.0),
                Vector2::new(500.0, -500.0),
            ])
            .unwrap()
            .to_halfspaces()
        });
        let setup = OcpSetup {
            model,
            specs: specs.clone(),
            weights: Weights::default_for(specs.len()),
            grid: legendre_grid(degree, 10.0).unwrap(),
            n_intervals,
            region,
            safety_vertices: safety,
            eta_d: Vector3::new(0.0, 0.0, 0.0),
        };
        Mpc::new(setup, SolverSettings::default())
    }

    fn idle_command() -> ThrusterCommand {
        ThrusterCommand {
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            f: vec![0.0; 3],
        }
    }

    #[test]
    fn stationary_plan_commands_negligible_thrust() {
        let mpc = mpc(8, 2, false);
        let outcome = mpc.plan(
            &Pose::new(0.0, 0.0, 0.0),
            &Velocity::default(),
            &idle_command(),
            None,
        );
        assert!(!outcome.degraded, "status {:?}", outcome.result.status);
        let f_norm: f64 = outcome.command.f.iter().map(|f| f * f).sum::<f64>().sqrt();
        // Against the 1.96e6 N scale this is solver-tolerance level.
        assert!(f_norm <= 50.0, "residual thrust {f_norm} N");
    }

    #[test]
    fn equilibrium_shift_is_a_fixed_point() {
        let mpc = mpc(4, 2, false);
        let (layout, cons) = mpc.layouts();
        let outcome = mpc.plan(
            &Pose::new(0.0, 0.0, 0.0),
            &Velocity::default(),
            &idle_command(),
            None,
        );
        assert!(!outcome.degraded);
        let warm = outcome.result.warm_start();
        let shifted = shift_warm_start(&layout, &cons, &warm);
        for (a, b) in warm.x.iter().zip(shifted.x.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn shift_bookkeeping_on_a_two_interval_layout() {
        let mpc = mpc(2, 2, true);
        let (layout, cons) = mpc.layouts();
        let dim = layout.dim();
        let warm = WarmStart {
            x: (0..dim).map(|i| i as f64).collect(),
            y_eq: (0..cons.n_eq()).map(|i| 1000.0 + i as f64).collect(),
            z_ineq: (0..cons.n_ineq()).map(|i| 2000.0 + i as f64).collect(),
            z_bounds: (0..2 * dim).map(|i| 3000.0 + i as f64).collect(),
        };
        let shifted = shift_warm_start(&layout, &cons, &warm);

        // New interval 0 is the old interval 1, verbatim.
        let period = layout.boundary(1) - layout.boundary(0);
        for off in 0..period {
            assert_eq!(shifted.x[off], warm.x[layout.boundary(1) + off]);
        }
        // New last-interval states equal the old terminal boundary state.
        for c in 0..STATE_DIM {
            let want = warm.x[layout.boundary(2) + c];
            assert_eq!(shifted.x[layout.boundary(1) + c], want);
            assert_eq!(shifted.x[layout.colloc(1, 1) + c], want);
            assert_eq!(shifted.x[layout.colloc(1, 2) + c], want);
            assert_eq!(shifted.x[layout.boundary(2) + c], want);
        }
        // Last-interval controls are duplicated in place.
        for i in 0..layout.n_thrusters {
            assert_eq!(
                shifted.x[layout.controls_f(1) + i],
                warm.x[layout.controls_f(1) + i]
            );
        }
        // Defect multipliers of interval 0 come from old interval 1.
        let dst = cons.defect_rows(0, 1);
        let src = cons.defect_rows(1, 1);
        for (a, b) in dst.zip(src) {
            assert_eq!(shifted.y_eq[a], warm.y_eq[b]);
        }
        // Spatial rows of the first collocation node come from the next
        // interval's matching node.
        let c01 = cons.spatial_rows(node_index(2, NodeTime::Collocation(0, 1)) - 1);
        let c11 = cons.spatial_rows(node_index(2, NodeTime::Collocation(1, 1)) - 1);
        for (a, b) in c01.zip(c11) {
            assert_eq!(shifted.z_ineq[a], warm.z_ineq[b]);
        }
        // Slew rows of interval 0 come from old interval 1.
        let s0 = cons.slew_rows(0, 0);
        let s1 = cons.slew_rows(1, 0);
        for (a, b) in s0.zip(s1) {
            assert_eq!(shifted.z_ineq[a], warm.z_ineq[b]);
        }
    }

    #[test]
    fn zero_duration_produces_an_empty_log() {
        let mpc = mpc(4, 2, false);
        let start = StartState {
            pose: Pose::new(10.0, 0.0, 0.0),
            velocity: Velocity::default(),
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
        };
        let log = mpc.run_closed_loop(&start, 0.0);
        assert!(log.samples.is_empty());
        assert!(log.replans.is_empty());
        assert!(!log.docked);
    }

    #[test]
    fn equilibrium_regulation_holds_station() {
        let mpc = mpc(6, 2, false);
        let start = StartState {
            pose: Pose::new(0.0, 0.0, 0.0),
            velocity: Velocity::default(),
            alpha: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
        };
        let log = mpc.run_closed_loop(&start, 60.0);
        assert!(log.docked, "equilibrium run should dock immediately");
        for s in &log.samples {
            let pos_err = (s.plant.pose.x.powi(2) + s.plant.pose.y.powi(2)).sqrt();
            assert!(pos_err <= 0.1, "drifted {pos_err} m at t = {}", s.plant.t);
            assert!(s.plant.pose.psi().abs() <= 0.5f64.to_radians());
        }
    }

    #[test]
    fn replanned_state_matches_prediction_without_mismatch() {
        // With the plant's slew disabled by commanding the current angles'
        // trajectory (previous_alpha equals the command), one period of
        // simulation must land on the predicted second boundary state.
        let mpc = mpc(8, 3, false);
        let pose = Pose::new(-150.0, 80.0, 0.4);
        let velocity = Velocity::new(0.3, 0.0, 0.0);
        let outcome = mpc.plan(&pose, &velocity, &idle_command(), None);
        assert!(!outcome.degraded);

        let trace = simulate_interval(
            &pose,
            &velocity,
            &outcome.command,
            &outcome.command.alpha, // actuators already at the commanded angles
            &mpc.setup.model,
            &mpc.setup.specs,
            0.0,
            10.0,
            0.01,
        );
        let end = trace.last().unwrap();
        let predicted = &outcome.predicted.points[1];
        // Scaled-state comparison at the 1e-3 level.
        let dx = (end.pose.x - predicted.pose.x) / 100.0;
        let dy = (end.pose.y - predicted.pose.y) / 100.0;
        let dpsi = wrap_angle(end.pose.psi() - predicted.pose.psi()) / std::f64::consts::PI;
        let du = end.velocity.u - predicted.velocity.u;
        let dv = end.velocity.v - predicted.velocity.v;
        let dr = (end.velocity.r - predicted.velocity.r) / 0.1;
        let err = (dx * dx + dy * dy + dpsi * dpsi + du * du + dv * dv + dr * dr).sqrt();
        assert!(err <= 1e-3, "plan/plant mismatch {err:.3e}");
    }
}
