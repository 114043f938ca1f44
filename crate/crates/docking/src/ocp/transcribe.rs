//! Assembly of the collocation NLP: objective quadrature, defect and
//! continuity equalities, spatial and slew inequalities, bounds, scaling and
//! analytic first derivatives, plus the block Hessian model (Gauss-Newton on
//! the quadratic terms, exact second derivatives of the singularity penalty).

use std::sync::Arc;

use nalgebra::{DMatrix, SMatrix, Vector2, Vector3};
use thiserror::Error;

use sqp::{ConstraintBlock, HessianBlock, JacPattern, JacValues, Nlp};

use super::{
    CollocationGrid, ConstraintLayout, DecisionLayout, VariableScaling, Weights, STATE_DIM,
};
use crate::geometry::{containment_residuals, Halfspace, HalfspaceSet};
use crate::thrust::{
    config_column_deriv, config_column_unchecked, full_alphas, singularity_cost,
    singularity_cost_derivs, ThrusterCommand, ThrusterKind, ThrusterSpec,
};
use crate::vessel::{
    rotation_planar, rotation_planar_deriv, wrap_angle, ModelMatrices, Pose, Velocity,
};

#[derive(Debug, Error)]
pub enum OcpError {
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("vector has length {got}, layout requires {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("initial azimuth angles: got {got}, expected {want}")]
    AlphaMismatch { got: usize, want: usize },
}

/// Static problem data: everything but the initial condition.
#[derive(Debug, Clone)]
pub struct OcpSetup {
    pub model: ModelMatrices,
    pub specs: Vec<ThrusterSpec>,
    pub weights: Weights,
    pub grid: CollocationGrid,
    pub n_intervals: usize,
    /// Operating region; `None` means open water.
    pub region: Option<HalfspaceSet>,
    /// Body-frame vertices of the safety polygon (dilated hull).
    pub safety_vertices: Vec<Vector2<f64>>,
    /// Desired docking pose.
    pub eta_d: Vector3<f64>,
}

/// Measured state the horizon is anchored to. `alpha` carries the previously
/// commanded azimuth angles (one per azimuth thruster): the first interval's
/// angles are rate-limited from these, which is how the actuator initial
/// condition enters the discretized problem.
#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub eta: Vector3<f64>,
    pub nu: Vector3<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub pose: Pose,
    pub velocity: Velocity,
    pub command: ThrusterCommand,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

/// Internal shared state captured by the NLP closures.
struct Tx {
    layout: DecisionLayout,
    cons: ConstraintLayout,
    grid: CollocationGrid,
    model: ModelMatrices,
    specs: Vec<ThrusterSpec>,
    /// Thruster indices that are azimuths, in spec order.
    az_idx: Vec<usize>,
    weights: Weights,
    scaling: VariableScaling,
    /// Per-component scale of a state slot.
    sstate: [f64; 6],
    /// Scaled desired pose (psi_d wrapped).
    eta_d_s: [f64; 3],
    region: Vec<Halfspace>,
    safety: Vec<Vector2<f64>>,
    init_state_s: [f64; 6],
    /// Scaled anchor angles for the first slew rows.
    init_alpha_s: Vec<f64>,
    /// Scaled slew bound per azimuth: rate_max * h / angle_scale.
    slew_bound_s: Vec<f64>,
}

impl Tx {
    fn n_az(&self) -> usize {
        self.az_idx.len()
    }

    fn state_phys(&self, x: &[f64], off: usize) -> [f64; 6] {
        let mut s = [0.0; 6];
        for c in 0..STATE_DIM {
            s[c] = x[off + c] * self.sstate[c];
        }
        s
    }

    /// Physical forces and full per-thruster angles of interval k.
    fn controls_phys(&self, x: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
        let cf = self.layout.controls_f(k);
        let ca = self.layout.controls_alpha(k);
        let f: Vec<f64> = (0..self.specs.len())
            .map(|i| x[cf + i] * self.scaling.force[i])
            .collect();
        let az: Vec<f64> = (0..self.n_az())
            .map(|a| x[ca + a] * self.scaling.angle)
            .collect();
        (f, full_alphas(&self.specs, &az))
    }

    /// Scaled dynamics at a physical state/controls point.
    fn dyn_scaled(&self, sp: &[f64; 6], f: &[f64], alphas: &[f64]) -> [f64; 6] {
        let phys = dynamics_phys(&self.model, &self.specs, sp, f, alphas);
        let mut out = [0.0; 6];
        for c in 0..STATE_DIM {
            out[c] = phys[c] / self.sstate[c];
        }
        out
    }

    /// Scaled Jacobians of the dynamics: (d/d state, d/d f, d/d azimuth).
    fn dyn_jacobians(
        &self,
        sp: &[f64; 6],
        f: &[f64],
        alphas: &[f64],
    ) -> (SMatrix<f64, 6, 6>, DMatrix<f64>, DMatrix<f64>) {
        let (a, mut bf, mut ba) =
            dynamics_jac_phys(&self.model, &self.specs, &self.az_idx, sp, f, alphas);
        let mut a_s = a;
        for c in 0..6 {
            for l in 0..6 {
                a_s[(c, l)] = a[(c, l)] * self.sstate[l] / self.sstate[c];
            }
        }
        for c in 0..6 {
            for i in 0..self.specs.len() {
                bf[(c, i)] *= self.scaling.force[i] / self.sstate[c];
            }
            for a_i in 0..self.n_az() {
                ba[(c, a_i)] *= self.scaling.angle / self.sstate[c];
            }
        }
        (a_s, bf, ba)
    }

    fn pose_error_s(&self, x: &[f64], off: usize) -> [f64; 3] {
        [
            x[off] - self.eta_d_s[0],
            x[off + 1] - self.eta_d_s[1],
            wrap_angle((x[off + 2] - self.eta_d_s[2]) * self.scaling.angle) / self.scaling.angle,
        ]
    }

    fn tracking_cost(&self, x: &[f64], off: usize) -> f64 {
        let e = self.pose_error_s(x, off);
        let q = &self.weights.q_eta;
        let qn = &self.weights.q_nu;
        let nu = [x[off + 3], x[off + 4], x[off + 5]];
        let mut total = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                total += e[i] * q[(i, j)] * e[j] + nu[i] * qn[(i, j)] * nu[j];
            }
        }
        total
    }

    fn effort_cost(&self, x: &[f64], k: usize) -> f64 {
        let cf = self.layout.controls_f(k);
        let n = self.specs.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += x[cf + i] * self.weights.r_f[(i, j)] * x[cf + j];
            }
        }
        total
    }

    /// Sum of the collocation quadrature weights (the running-cost weight of
    /// one interval's controls, before the h factor).
    fn interval_quad_weight(&self) -> f64 {
        self.grid.quad.iter().skip(1).sum()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let h = self.grid.interval;
        let n_int = self.layout.n_intervals;
        let mut total = 0.0;
        for k in 0..n_int {
            let (_, alphas) = self.controls_phys(x, k);
            let pen = singularity_cost(&self.specs, &alphas, &self.weights.allocation);
            let eff = self.effort_cost(x, k);
            for j in 1..=self.grid.degree {
                let tracking = self.tracking_cost(x, self.layout.colloc(k, j));
                total += h * self.grid.quad[j] * (tracking + eff + pen);
            }
        }
        // Terminal weight: one extra stage evaluation at the final boundary
        // state, using the last interval's controls.
        let k = n_int - 1;
        let (_, alphas) = self.controls_phys(x, k);
        let pen = singularity_cost(&self.specs, &alphas, &self.weights.allocation);
        let eff = self.effort_cost(x, k);
        total += h * (self.tracking_cost(x, self.layout.boundary(n_int)) + eff + pen);
        total
    }

    fn add_tracking_grad(&self, x: &[f64], off: usize, w: f64, out: &mut [f64]) {
        let e = self.pose_error_s(x, off);
        let nu = [x[off + 3], x[off + 4], x[off + 5]];
        let q = &self.weights.q_eta;
        let qn = &self.weights.q_nu;
        for i in 0..3 {
            let mut ge = 0.0;
            let mut gn = 0.0;
            for j in 0..3 {
                ge += 2.0 * q[(i, j)] * e[j];
                gn += 2.0 * qn[(i, j)] * nu[j];
            }
            out[off + i] += w * ge;
            out[off + 3 + i] += w * gn;
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let h = self.grid.interval;
        let n_int = self.layout.n_intervals;
        let n = self.specs.len();
        let base_w = h * self.interval_quad_weight();
        for k in 0..n_int {
            let w_ctrl = if k == n_int - 1 { base_w + h } else { base_w };
            let cf = self.layout.controls_f(k);
            let ca = self.layout.controls_alpha(k);
            let (_, alphas) = self.controls_phys(x, k);
            let (_, pen_grad, _) =
                singularity_cost_derivs(&self.specs, &alphas, &self.weights.allocation);
            for i in 0..n {
                let mut g = 0.0;
                for j in 0..n {
                    g += 2.0 * self.weights.r_f[(i, j)] * x[cf + j];
                }
                out[cf + i] += w_ctrl * g;
            }
            for a in 0..self.n_az() {
                out[ca + a] += w_ctrl * pen_grad[a] * self.scaling.angle;
            }
            for j in 1..=self.grid.degree {
                self.add_tracking_grad(x, self.layout.colloc(k, j), h * self.grid.quad[j], out);
            }
        }
        self.add_tracking_grad(x, self.layout.boundary(n_int), h, out);
    }

    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        let h = self.grid.interval;
        let b0 = self.layout.boundary(0);
        for i in 0..STATE_DIM {
            out[i] = x[b0 + i] - self.init_state_s[i];
        }
        for k in 0..self.layout.n_intervals {
            let (f, alphas) = self.controls_phys(x, k);
            for j in 1..=self.grid.degree {
                let off_j = self.layout.colloc(k, j);
                let sp = self.state_phys(x, off_j);
                let fd = self.dyn_scaled(&sp, &f, &alphas);
                let rows = self.cons.defect_rows(k, j);
                for c in 0..STATE_DIM {
                    let mut v = -h * fd[c];
                    for m in 0..=self.grid.degree {
                        v += self.grid.diff[m][j - 1] * x[self.layout.basis_state(k, m) + c];
                    }
                    out[rows.start + c] = v;
                }
            }
            let rows = self.cons.continuity_rows(k);
            let b_next = self.layout.boundary(k + 1);
            for c in 0..STATE_DIM {
                let mut v = -x[b_next + c];
                for m in 0..=self.grid.degree {
                    v += self.grid.end[m] * x[self.layout.basis_state(k, m) + c];
                }
                out[rows.start + c] = v;
            }
        }
    }

    fn eq_pattern(&self) -> JacPattern {
        let mut rows = vec![Vec::new(); self.cons.n_eq()];
        let b0 = self.layout.boundary(0);
        for (i, row) in rows.iter_mut().take(STATE_DIM).enumerate() {
            *row = vec![b0 + i];
        }
        for k in 0..self.layout.n_intervals {
            let cf = self.layout.controls_f(k);
            let ca = self.layout.controls_alpha(k);
            for j in 1..=self.grid.degree {
                let drows = self.cons.defect_rows(k, j);
                for c in 0..STATE_DIM {
                    let mut cols = Vec::new();
                    for m in 0..=self.grid.degree {
                        let off = self.layout.basis_state(k, m);
                        if m == j {
                            cols.extend(off..off + STATE_DIM);
                        } else {
                            cols.push(off + c);
                        }
                    }
                    cols.extend(cf..cf + self.specs.len());
                    cols.extend(ca..ca + self.n_az());
                    rows[drows.start + c] = cols;
                }
            }
            let crows = self.cons.continuity_rows(k);
            let b_next = self.layout.boundary(k + 1);
            for c in 0..STATE_DIM {
                let mut cols = Vec::new();
                for m in 0..=self.grid.degree {
                    cols.push(self.layout.basis_state(k, m) + c);
                }
                cols.push(b_next + c);
                rows[crows.start + c] = cols;
            }
        }
        JacPattern { rows }
    }

    fn eq_jac(&self, x: &[f64], out: &mut JacValues) {
        let h = self.grid.interval;
        for i in 0..STATE_DIM {
            out.rows[i][0] = 1.0;
        }
        for k in 0..self.layout.n_intervals {
            let (f, alphas) = self.controls_phys(x, k);
            for j in 1..=self.grid.degree {
                let off_j = self.layout.colloc(k, j);
                let sp = self.state_phys(x, off_j);
                let (a_s, bf_s, ba_s) = self.dyn_jacobians(&sp, &f, &alphas);
                let drows = self.cons.defect_rows(k, j);
                for c in 0..STATE_DIM {
                    let vals = &mut out.rows[drows.start + c];
                    let mut p = 0;
                    for m in 0..=self.grid.degree {
                        if m == j {
                            for l in 0..STATE_DIM {
                                let mut v = -h * a_s[(c, l)];
                                if l == c {
                                    v += self.grid.diff[m][j - 1];
                                }
                                vals[p] = v;
                                p += 1;
                            }
                        } else {
                            vals[p] = self.grid.diff[m][j - 1];
                            p += 1;
                        }
                    }
                    for i in 0..self.specs.len() {
                        vals[p] = -h * bf_s[(c, i)];
                        p += 1;
                    }
                    for a in 0..self.n_az() {
                        vals[p] = -h * ba_s[(c, a)];
                        p += 1;
                    }
                }
            }
            let crows = self.cons.continuity_rows(k);
            for c in 0..STATE_DIM {
                let vals = &mut out.rows[crows.start + c];
                let mut p = 0;
                for m in 0..=self.grid.degree {
                    vals[p] = self.grid.end[m];
                    p += 1;
                }
                vals[p] = -1.0;
            }
        }
    }

    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        if self.cons.rows_per_node() > 0 {
            for (node_idx, node) in self.layout.state_nodes().iter().enumerate().skip(1) {
                let off = node.offset;
                let pos = Vector2::new(
                    x[off] * self.scaling.position,
                    x[off + 1] * self.scaling.position,
                );
                let rot = rotation_planar(x[off + 2] * self.scaling.angle);
                let mut r = self.cons.spatial_rows(node_idx - 1).start;
                for v in &self.safety {
                    let world = rot * v + pos;
                    for hs in &self.region {
                        out[r] = (hs.offset - hs.normal.dot(&world)) / self.scaling.position;
                        r += 1;
                    }
                }
            }
        }
        for k in 0..self.layout.n_intervals {
            let ca = self.layout.controls_alpha(k);
            for a in 0..self.n_az() {
                let rows = self.cons.slew_rows(k, a);
                let prev = if k == 0 {
                    self.init_alpha_s[a]
                } else {
                    x[self.layout.controls_alpha(k - 1) + a]
                };
                let diff = x[ca + a] - prev;
                out[rows.start] = self.slew_bound_s[a] - diff;
                out[rows.start + 1] = self.slew_bound_s[a] + diff;
            }
        }
    }

    fn ineq_pattern(&self) -> JacPattern {
        let mut rows = vec![Vec::new(); self.cons.n_ineq()];
        if self.cons.rows_per_node() > 0 {
            for (node_idx, node) in self.layout.state_nodes().iter().enumerate().skip(1) {
                let off = node.offset;
                let base = self.cons.spatial_rows(node_idx - 1).start;
                for r in 0..self.cons.rows_per_node() {
                    rows[base + r] = vec![off, off + 1, off + 2];
                }
            }
        }
        for k in 0..self.layout.n_intervals {
            let ca = self.layout.controls_alpha(k);
            for a in 0..self.n_az() {
                let slew = self.cons.slew_rows(k, a);
                if k == 0 {
                    rows[slew.start] = vec![ca + a];
                    rows[slew.start + 1] = vec![ca + a];
                } else {
                    let prev = self.layout.controls_alpha(k - 1) + a;
                    rows[slew.start] = vec![ca + a, prev];
                    rows[slew.start + 1] = vec![ca + a, prev];
                }
            }
        }
        JacPattern { rows }
    }

    fn ineq_jac(&self, x: &[f64], out: &mut JacValues) {
        if self.cons.rows_per_node() > 0 {
            let angle_over_pos = self.scaling.angle / self.scaling.position;
            for (node_idx, node) in self.layout.state_nodes().iter().enumerate().skip(1) {
                let off = node.offset;
                let drot = rotation_planar_deriv(x[off + 2] * self.scaling.angle);
                let mut r = self.cons.spatial_rows(node_idx - 1).start;
                for v in &self.safety {
                    let dworld_dpsi = drot * v;
                    for hs in &self.region {
                        let vals = &mut out.rows[r];
                        vals[0] = -hs.normal.x;
                        vals[1] = -hs.normal.y;
                        vals[2] = -hs.normal.dot(&dworld_dpsi) * angle_over_pos;
                        r += 1;
                    }
                }
            }
        }
        for k in 0..self.layout.n_intervals {
            for a in 0..self.n_az() {
                let rows = self.cons.slew_rows(k, a);
                if k == 0 {
                    out.rows[rows.start][0] = -1.0;
                    out.rows[rows.start + 1][0] = 1.0;
                } else {
                    out.rows[rows.start][0] = -1.0;
                    out.rows[rows.start][1] = 1.0;
                    out.rows[rows.start + 1][0] = 1.0;
                    out.rows[rows.start + 1][1] = -1.0;
                }
            }
        }
    }

    // The two emitters below must walk identical loops: the value writer
    // steps through the pattern positions in emission order.

    fn hess_pattern(&self) -> Vec<(usize, usize)> {
        let mut pat = Vec::new();
        let n = self.specs.len();
        let na = self.n_az();
        let state_block = |pat: &mut Vec<(usize, usize)>, off: usize| {
            for r in 0..3 {
                for c in 0..=r {
                    pat.push((off + r, off + c));
                }
            }
            for r in 0..3 {
                for c in 0..=r {
                    pat.push((off + 3 + r, off + 3 + c));
                }
            }
        };
        let control_blocks = |pat: &mut Vec<(usize, usize)>, cf: usize, ca: usize| {
            for r in 0..n {
                for c in 0..=r {
                    pat.push((cf + r, cf + c));
                }
            }
            for r in 0..na {
                for c in 0..=r {
                    pat.push((ca + r, ca + c));
                }
            }
        };
        for k in 0..self.layout.n_intervals {
            for j in 1..=self.grid.degree {
                state_block(&mut pat, self.layout.colloc(k, j));
            }
            control_blocks(
                &mut pat,
                self.layout.controls_f(k),
                self.layout.controls_alpha(k),
            );
        }
        state_block(&mut pat, self.layout.boundary(self.layout.n_intervals));
        let k = self.layout.n_intervals - 1;
        control_blocks(
            &mut pat,
            self.layout.controls_f(k),
            self.layout.controls_alpha(k),
        );
        pat
    }

    fn hess_values(&self, x: &[f64], out: &mut [f64]) {
        let h = self.grid.interval;
        let n = self.specs.len();
        let na = self.n_az();
        let mut p = 0;
        // Tracking blocks carry 2 w Q; penalty blocks carry w_pen times the
        // exact penalty Hessian (alpha chain rule squared).
        let state_block = |out: &mut [f64], p: &mut usize, w: f64, tx: &Tx| {
            for r in 0..3 {
                for c in 0..=r {
                    out[*p] = 2.0 * w * tx.weights.q_eta[(r, c)];
                    *p += 1;
                }
            }
            for r in 0..3 {
                for c in 0..=r {
                    out[*p] = 2.0 * w * tx.weights.q_nu[(r, c)];
                    *p += 1;
                }
            }
        };
        let control_blocks =
            |out: &mut [f64], p: &mut usize, w: f64, pen_hess: &DMatrix<f64>, tx: &Tx| {
                for r in 0..n {
                    for c in 0..=r {
                        out[*p] = 2.0 * w * tx.weights.r_f[(r, c)];
                        *p += 1;
                    }
                }
                let a2 = tx.scaling.angle * tx.scaling.angle;
                for r in 0..na {
                    for c in 0..=r {
                        out[*p] = w * a2 * pen_hess[(r, c)];
                        *p += 1;
                    }
                }
            };
        let base_w = h * self.interval_quad_weight();
        for k in 0..self.layout.n_intervals {
            for j in 1..=self.grid.degree {
                state_block(out, &mut p, h * self.grid.quad[j], self);
            }
            let (_, alphas) = self.controls_phys(x, k);
            let (_, _, pen_hess) =
                singularity_cost_derivs(&self.specs, &alphas, &self.weights.allocation);
            control_blocks(out, &mut p, base_w, &pen_hess, self);
        }
        state_block(out, &mut p, h, self);
        let k = self.layout.n_intervals - 1;
        let (_, alphas) = self.controls_phys(x, k);
        let (_, _, pen_hess) =
            singularity_cost_derivs(&self.specs, &alphas, &self.weights.allocation);
        control_blocks(out, &mut p, h, &pen_hess, self);
        debug_assert_eq!(p, out.len());
    }
}

/// Physical continuous dynamics as a flat 6-vector.
fn dynamics_phys(
    model: &ModelMatrices,
    specs: &[ThrusterSpec],
    sp: &[f64; 6],
    f: &[f64],
    alphas: &[f64],
) -> [f64; 6] {
    let (s, c) = sp[2].sin_cos();
    let (u, v, r) = (sp[3], sp[4], sp[5]);
    let mut tau = Vector3::zeros();
    for (i, spec) in specs.iter().enumerate() {
        tau += config_column_unchecked(spec, alphas[i]) * f[i];
    }
    let nu = Vector3::new(u, v, r);
    let nu_dot = model.m_inv * (tau - model.d * nu);
    [
        c * u - s * v,
        s * u + c * v,
        r,
        nu_dot[0],
        nu_dot[1],
        nu_dot[2],
    ]
}

/// Physical Jacobians of [`dynamics_phys`] with respect to state, forces and
/// azimuth angles.
fn dynamics_jac_phys(
    model: &ModelMatrices,
    specs: &[ThrusterSpec],
    az_idx: &[usize],
    sp: &[f64; 6],
    f: &[f64],
    alphas: &[f64],
) -> (SMatrix<f64, 6, 6>, DMatrix<f64>, DMatrix<f64>) {
    let (s, c) = sp[2].sin_cos();
    let (u, v, _r) = (sp[3], sp[4], sp[5]);
    let mut a = SMatrix::<f64, 6, 6>::zeros();
    a[(0, 2)] = -s * u - c * v;
    a[(0, 3)] = c;
    a[(0, 4)] = -s;
    a[(1, 2)] = c * u - s * v;
    a[(1, 3)] = s;
    a[(1, 4)] = c;
    a[(2, 5)] = 1.0;
    let m_inv_d = model.m_inv * model.d;
    for i in 0..3 {
        for j in 0..3 {
            a[(3 + i, 3 + j)] = -m_inv_d[(i, j)];
        }
    }

    let mut bf = DMatrix::zeros(6, specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let col = model.m_inv * config_column_unchecked(spec, alphas[i]);
        for r in 0..3 {
            bf[(3 + r, i)] = col[r];
        }
    }
    let mut ba = DMatrix::zeros(6, az_idx.len());
    for (a_i, &ti) in az_idx.iter().enumerate() {
        let col = model.m_inv * (config_column_deriv(&specs[ti], alphas[ti]) * f[ti]);
        for r in 0..3 {
            ba[(3 + r, a_i)] = col[r];
        }
    }
    (a, bf, ba)
}

/// Transcribed problem handle: the NLP plus the bookkeeping needed to read
/// solutions back out.
pub struct TranscribedOcp {
    pub nlp: Nlp,
    pub layout: DecisionLayout,
    pub constraints: ConstraintLayout,
    pub scaling: VariableScaling,
    pub warnings: Vec<String>,
    tx: Arc<Tx>,
}

impl TranscribedOcp {
    /// Boundary states with per-interval controls at t = k h; the final row
    /// repeats the last interval's controls. Headings are wrapped.
    pub fn extract_trajectory(&self, x: &[f64]) -> Result<Trajectory, OcpError> {
        if x.len() != self.layout.dim() {
            return Err(OcpError::DimensionMismatch {
                got: x.len(),
                want: self.layout.dim(),
            });
        }
        let n_int = self.layout.n_intervals;
        let h = self.tx.grid.interval;
        let mut points = Vec::with_capacity(n_int + 1);
        for k in 0..=n_int {
            let sp = self.tx.state_phys(x, self.layout.boundary(k));
            let (f, alphas) = self.tx.controls_phys(x, k.min(n_int - 1));
            points.push(TrajectoryPoint {
                t: k as f64 * h,
                pose: Pose::new(sp[0], sp[1], sp[2]),
                velocity: Velocity::new(sp[3], sp[4], sp[5]),
                command: ThrusterCommand { alpha: alphas, f },
            });
        }
        Ok(Trajectory { points })
    }

    /// First-interval command of a solution.
    pub fn first_command(&self, x: &[f64]) -> Result<ThrusterCommand, OcpError> {
        if x.len() != self.layout.dim() {
            return Err(OcpError::DimensionMismatch {
                got: x.len(),
                want: self.layout.dim(),
            });
        }
        let (f, alphas) = self.tx.controls_phys(x, 0);
        Ok(ThrusterCommand { alpha: alphas, f })
    }

    /// Interval length in seconds.
    pub fn interval(&self) -> f64 {
        self.tx.grid.interval
    }

    /// Minimum containment residual (meters) over all state nodes of a
    /// decision vector; `None` without a region.
    pub fn min_spatial_residual(&self, x: &[f64]) -> Option<f64> {
        if self.tx.region.is_empty() {
            return None;
        }
        let region = HalfspaceSet {
            rows: self.tx.region.clone(),
        };
        let mut min = f64::INFINITY;
        for node in self.layout.state_nodes() {
            let sp = self.tx.state_phys(x, node.offset);
            let res =
                containment_residuals(&region, &Pose::new(sp[0], sp[1], sp[2]), &self.tx.safety);
            min = min.min(res.iter().fold(f64::INFINITY, |acc, &r| acc.min(r)));
        }
        Some(min)
    }
}

/// Build the NLP for a setup and initial condition.
pub fn transcribe(setup: &OcpSetup, init: &InitialCondition) -> Result<TranscribedOcp, OcpError> {
    setup.weights.validate()?;
    let az_idx: Vec<usize> = (0..setup.specs.len())
        .filter(|&i| setup.specs[i].is_azimuth())
        .collect();
    if init.alpha.len() != az_idx.len() {
        return Err(OcpError::AlphaMismatch {
            got: init.alpha.len(),
            want: az_idx.len(),
        });
    }

    let layout = DecisionLayout {
        n_intervals: setup.n_intervals,
        degree: setup.grid.degree,
        n_thrusters: setup.specs.len(),
        n_azimuth: az_idx.len(),
    };
    let cons = ConstraintLayout {
        n_intervals: setup.n_intervals,
        degree: setup.grid.degree,
        n_azimuth: az_idx.len(),
        n_region_rows: setup.region.as_ref().map_or(0, |r| r.len()),
        n_safety_vertices: setup.safety_vertices.len(),
    };
    let scaling = VariableScaling::for_specs(&setup.specs);
    let sstate = scaling.state();

    let eta_d_s = [
        setup.eta_d[0] / scaling.position,
        setup.eta_d[1] / scaling.position,
        wrap_angle(setup.eta_d[2]) / scaling.angle,
    ];
    let init_state_s = [
        init.eta[0] / sstate[0],
        init.eta[1] / sstate[1],
        init.eta[2] / sstate[2],
        init.nu[0] / sstate[3],
        init.nu[1] / sstate[4],
        init.nu[2] / sstate[5],
    ];
    let init_alpha_s: Vec<f64> = init.alpha.iter().map(|a| a / scaling.angle).collect();
    let slew_bound_s: Vec<f64> = az_idx
        .iter()
        .map(|&ti| match setup.specs[ti].kind {
            ThrusterKind::Azimuth { alpha_rate_max, .. } => {
                alpha_rate_max * setup.grid.interval / scaling.angle
            }
            ThrusterKind::Fixed { .. } => unreachable!(),
        })
        .collect();

    let mut warnings = Vec::new();
    if let Some(region) = &setup.region {
        let res = containment_residuals(
            region,
            &Pose::new(init.eta[0], init.eta[1], init.eta[2]),
            &setup.safety_vertices,
        );
        let min = res.iter().fold(f64::INFINITY, |acc, &r| acc.min(r));
        if min < 0.0 {
            warnings.push(format!(
                "initial pose violates the operating region by {:.2} m; \
                 the solver will try to recover feasibility",
                -min
            ));
        }
    }

    let tx = Arc::new(Tx {
        layout,
        cons,
        grid: setup.grid.clone(),
        model: setup.model.clone(),
        specs: setup.specs.clone(),
        az_idx,
        weights: setup.weights.clone(),
        scaling: scaling.clone(),
        sstate,
        eta_d_s,
        region: setup
            .region
            .as_ref()
            .map_or(Vec::new(), |r| r.rows.clone()),
        safety: setup.safety_vertices.clone(),
        init_state_s,
        init_alpha_s,
        slew_bound_s,
    });

    // Bounds: states free, forces and azimuth angles boxed.
    let dim = layout.dim();
    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    for k in 0..layout.n_intervals {
        let cf = layout.controls_f(k);
        for (i, spec) in tx.specs.iter().enumerate() {
            lower[cf + i] = spec.f_min / scaling.force[i];
            upper[cf + i] = spec.f_max / scaling.force[i];
        }
        let ca = layout.controls_alpha(k);
        for (a, &ti) in tx.az_idx.iter().enumerate() {
            if let ThrusterKind::Azimuth {
                alpha_min,
                alpha_max,
                ..
            } = tx.specs[ti].kind
            {
                lower[ca + a] = alpha_min / scaling.angle;
                upper[ca + a] = alpha_max / scaling.angle;
            }
        }
    }

    // Cold-start point: hold the measured state, zero thrust, anchor angles.
    let mut x0 = vec![0.0; dim];
    for node in layout.state_nodes() {
        x0[node.offset..node.offset + STATE_DIM].copy_from_slice(&tx.init_state_s);
    }
    for k in 0..layout.n_intervals {
        let ca = layout.controls_alpha(k);
        for a in 0..tx.n_az() {
            x0[ca + a] = tx.init_alpha_s[a].clamp(lower[ca + a], upper[ca + a]);
        }
    }

    let eq_pattern = tx.eq_pattern();
    let ineq_pattern = tx.ineq_pattern();
    let hess_pattern = tx.hess_pattern();

    let t1 = tx.clone();
    let t2 = tx.clone();
    let t3 = tx.clone();
    let t4 = tx.clone();
    let t5 = tx.clone();
    let t6 = tx.clone();
    let t7 = tx.clone();

    let nlp = Nlp {
        dim,
        lower,
        upper,
        x0,
        objective: Box::new(move |x| t1.objective(x)),
        gradient: Box::new(move |x, out| t2.gradient(x, out)),
        eq: ConstraintBlock {
            pattern: eq_pattern,
            eval: Box::new(move |x, out| t3.eq_values(x, out)),
            jac: Box::new(move |x, out| t4.eq_jac(x, out)),
        },
        ineq: ConstraintBlock {
            pattern: ineq_pattern,
            eval: Box::new(move |x, out| t5.ineq_values(x, out)),
            jac: Box::new(move |x, out| t6.ineq_jac(x, out)),
        },
        hessian: Some(HessianBlock {
            pattern: hess_pattern,
            eval: Box::new(move |x, out| t7.hess_values(x, out)),
        }),
    };

    Ok(TranscribedOcp {
        nlp,
        layout,
        constraints: cons,
        scaling,
        warnings,
        tx,
    })
}

/// Implicitly integrate one interval with fixed controls by solving the
/// collocation defect system (Newton iteration in physical units). Returns
/// the interpolated end state. This is the same implicit scheme the
/// transcription enforces, exposed standalone for consistency checks.
pub fn collocate_interval(
    model: &ModelMatrices,
    specs: &[ThrusterSpec],
    grid: &CollocationGrid,
    state0: &[f64; 6],
    f: &[f64],
    alphas: &[f64],
) -> [f64; 6] {
    let d = grid.degree;
    let h = grid.interval;
    let az_idx: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].is_azimuth()).collect();
    let n = 6 * d;
    let mut z = vec![0.0; n];
    for j in 0..d {
        z[6 * j..6 * j + 6].copy_from_slice(state0);
    }

    for _iter in 0..50 {
        let mut res = DMatrix::zeros(n, 1);
        let mut jac = DMatrix::zeros(n, n);
        for j in 1..=d {
            let mut sj = [0.0; 6];
            sj.copy_from_slice(&z[6 * (j - 1)..6 * j]);
            let fd = dynamics_phys(model, specs, &sj, f, alphas);
            let (a, _, _) = dynamics_jac_phys(model, specs, &az_idx, &sj, f, alphas);
            for c in 0..6 {
                let row = 6 * (j - 1) + c;
                let mut v = grid.diff[0][j - 1] * state0[c] - h * fd[c];
                for m in 1..=d {
                    v += grid.diff[m][j - 1] * z[6 * (m - 1) + c];
                }
                res[(row, 0)] = v;
                for m in 1..=d {
                    let base = 6 * (m - 1);
                    if m == j {
                        for l in 0..6 {
                            let mut jv = -h * a[(c, l)];
                            if l == c {
                                jv += grid.diff[m][j - 1];
                            }
                            jac[(row, base + l)] += jv;
                        }
                    } else {
                        jac[(row, base + c)] += grid.diff[m][j - 1];
                    }
                }
            }
        }
        if res.amax() < 1e-12 {
            break;
        }
        let step = jac.lu().solve(&res).expect("collocation Newton system");
        for i in 0..n {
            z[i] -= step[(i, 0)];
        }
    }

    let mut end = [0.0; 6];
    for c in 0..6 {
        let mut v = grid.end[0] * state0[c];
        for m in 1..=d {
            v += grid.end[m] * z[6 * (m - 1) + c];
        }
        end[c] = v;
    }
    end
}
