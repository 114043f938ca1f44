//! SQP iteration: QP subproblems, l1 merit line search, multiplier updates.

use std::time::Instant;

use crate::problem::{JacPattern, JacValues, Nlp};
use crate::qp::{QpInputs, QpSettings, QpStatus, QpWorkspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianMode {
    /// Use the problem's structured Hessian model (Gauss-Newton plus exact
    /// terms supplied by the caller). Falls back to BFGS when the problem
    /// does not provide one.
    GaussNewton,
    DampedBfgs,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Scaled KKT tolerance.
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub hessian_mode: HessianMode,
    /// Smallest nonzero primal regularization used for inertia correction.
    pub regularization_floor: f64,
    /// Multiplicative growth of the l1 merit penalty.
    pub penalty_growth: f64,
    /// Backtracking ratio in (0, 1).
    pub backtrack_ratio: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_constant: f64,
    /// Print per-iteration diagnostics to stderr.
    pub verbose: bool,
    pub qp: QpSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kkt_tolerance: 1e-6,
            max_iterations: 200,
            hessian_mode: HessianMode::GaussNewton,
            regularization_floor: 1e-10,
            penalty_growth: 1.5,
            backtrack_ratio: 0.5,
            armijo_constant: 1e-4,
            verbose: false,
            qp: QpSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InfeasibleQp,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub qp_iterations: usize,
    pub restorations: usize,
    pub kkt_residual: f64,
    pub wall_time: std::time::Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub y_eq: Vec<f64>,
    pub z_ineq: Vec<f64>,
    /// Bound multipliers, two per variable: `[2i]` lower, `[2i+1]` upper.
    pub z_bounds: Vec<f64>,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            x: self.x.clone(),
            y_eq: self.y_eq.clone(),
            z_ineq: self.z_ineq.clone(),
            z_bounds: self.z_bounds.clone(),
        }
    }
}

/// Primal/dual initialization for a solve; dimensions must match the target
/// problem.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y_eq: Vec<f64>,
    pub z_ineq: Vec<f64>,
    pub z_bounds: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct KktBreakdown {
    pub stationarity: f64,
    pub eq_violation: f64,
    pub ineq_violation: f64,
    pub complementarity: f64,
    /// IPOPT-style scaled combination used as the convergence test.
    pub scaled: f64,
}

/// Evaluate the scaled KKT residual of `nlp` at a primal-dual point.
pub fn kkt_residual(nlp: &Nlp, x: &[f64], y: &[f64], z: &[f64], zb: &[f64]) -> KktBreakdown {
    let n = nlp.dim;
    let mut grad = vec![0.0; n];
    (nlp.gradient)(x, &mut grad);
    let mut c_eq = vec![0.0; nlp.n_eq()];
    (nlp.eq.eval)(x, &mut c_eq);
    let mut jac_eq = JacValues::zeros_like(&nlp.eq.pattern);
    (nlp.eq.jac)(x, &mut jac_eq);
    let mut c_in = vec![0.0; nlp.n_ineq()];
    (nlp.ineq.eval)(x, &mut c_in);
    let mut jac_in = JacValues::zeros_like(&nlp.ineq.pattern);
    (nlp.ineq.jac)(x, &mut jac_in);

    let mut stat = grad;
    for (r, (cols, vals)) in nlp
        .eq
        .pattern
        .rows
        .iter()
        .zip(jac_eq.rows.iter())
        .enumerate()
    {
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            stat[c] -= v * y[r];
        }
    }
    for (i, (cols, vals)) in nlp
        .ineq
        .pattern
        .rows
        .iter()
        .zip(jac_in.rows.iter())
        .enumerate()
    {
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            stat[c] -= v * z[i];
        }
    }
    for i in 0..n {
        stat[i] -= zb[2 * i];
        stat[i] += zb[2 * i + 1];
    }

    let stationarity = inf_norm(&stat);
    let eq_violation = inf_norm(&c_eq);
    let mut ineq_violation = 0.0f64;
    let mut complementarity = 0.0f64;
    for (i, &ci) in c_in.iter().enumerate() {
        ineq_violation = ineq_violation.max(-ci);
        complementarity = complementarity.max((z[i] * ci).abs());
    }
    for i in 0..n {
        if nlp.lower[i].is_finite() {
            ineq_violation = ineq_violation.max(nlp.lower[i] - x[i]);
            complementarity = complementarity.max((zb[2 * i] * (x[i] - nlp.lower[i])).abs());
        }
        if nlp.upper[i].is_finite() {
            ineq_violation = ineq_violation.max(x[i] - nlp.upper[i]);
            complementarity = complementarity.max((zb[2 * i + 1] * (nlp.upper[i] - x[i])).abs());
        }
    }

    let mult_sum: f64 = y.iter().map(|v| v.abs()).sum::<f64>()
        + z.iter().map(|v| v.abs()).sum::<f64>()
        + zb.iter().map(|v| v.abs()).sum::<f64>();
    let mult_count = (y.len() + z.len() + zb.len()).max(1);
    let s_d = (100.0f64).max(mult_sum / mult_count as f64) / 100.0;

    let scaled = (stationarity / s_d)
        .max(eq_violation)
        .max(ineq_violation)
        .max(complementarity / s_d);
    KktBreakdown {
        stationarity,
        eq_violation,
        ineq_violation,
        complementarity,
        scaled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction for the merit function")]
    NoDescent,
    #[error("backtracking reached the minimum step length")]
    StepTooSmall,
}

/// Backtracking Armijo search on a merit function. `merit(alpha)` evaluates
/// the merit at `x + alpha d`; `directional` is (an upper bound on) its
/// directional derivative at `alpha = 0`, which must be negative.
pub fn merit_line_search(
    merit: impl Fn(f64) -> f64,
    merit0: f64,
    directional: f64,
    backtrack_ratio: f64,
    armijo_constant: f64,
    min_alpha: f64,
) -> Result<f64, LineSearchError> {
    if !(directional < 0.0) {
        return Err(LineSearchError::NoDescent);
    }
    let mut alpha = 1.0;
    while alpha >= min_alpha {
        if merit(alpha) <= merit0 + armijo_constant * alpha * directional {
            return Ok(alpha);
        }
        alpha *= backtrack_ratio;
    }
    Err(LineSearchError::StepTooSmall)
}

struct Evaluation {
    f: f64,
    grad: Vec<f64>,
    c_eq: Vec<f64>,
    jac_eq: JacValues,
    c_in: Vec<f64>,
    jac_in: JacValues,
}

fn evaluate(nlp: &Nlp, x: &[f64]) -> Evaluation {
    let mut grad = vec![0.0; nlp.dim];
    (nlp.gradient)(x, &mut grad);
    let mut c_eq = vec![0.0; nlp.n_eq()];
    (nlp.eq.eval)(x, &mut c_eq);
    let mut jac_eq = JacValues::zeros_like(&nlp.eq.pattern);
    (nlp.eq.jac)(x, &mut jac_eq);
    let mut c_in = vec![0.0; nlp.n_ineq()];
    (nlp.ineq.eval)(x, &mut c_in);
    let mut jac_in = JacValues::zeros_like(&nlp.ineq.pattern);
    (nlp.ineq.jac)(x, &mut jac_in);
    Evaluation {
        f: (nlp.objective)(x),
        grad,
        c_eq,
        jac_eq,
        c_in,
        jac_in,
    }
}

/// l1 constraint violation including bounds.
fn violation_l1(nlp: &Nlp, x: &[f64], c_eq: &[f64], c_in: &[f64]) -> f64 {
    let mut v: f64 = c_eq.iter().map(|c| c.abs()).sum();
    v += c_in.iter().map(|c| (-c).max(0.0)).sum::<f64>();
    for i in 0..nlp.dim {
        if nlp.lower[i].is_finite() {
            v += (nlp.lower[i] - x[i]).max(0.0);
        }
        if nlp.upper[i].is_finite() {
            v += (x[i] - nlp.upper[i]).max(0.0);
        }
    }
    v
}

fn clamp_to_bounds(nlp: &Nlp, x: &mut [f64]) {
    for i in 0..nlp.dim {
        x[i] = x[i].clamp(nlp.lower[i], nlp.upper[i]);
    }
}

/// Solve an NLP by SQP. `warm` seeds both the primal point and the
/// multipliers; a cold start uses `nlp.x0` and zero multipliers.
pub fn solve(nlp: &Nlp, settings: &SolverSettings, warm: Option<&WarmStart>) -> SolveResult {
    let start_time = Instant::now();
    let n = nlp.dim;
    let m_eq = nlp.n_eq();
    let m_in = nlp.n_ineq();

    let mut x = match warm {
        Some(w) => w.x.clone(),
        None => nlp.x0.clone(),
    };
    assert_eq!(x.len(), n);
    clamp_to_bounds(nlp, &mut x);

    let mut y = warm.map(|w| w.y_eq.clone()).unwrap_or(vec![0.0; m_eq]);
    let mut z = warm.map(|w| w.z_ineq.clone()).unwrap_or(vec![0.0; m_in]);
    let mut zb = warm.map(|w| w.z_bounds.clone()).unwrap_or(vec![0.0; 2 * n]);
    assert_eq!(y.len(), m_eq);
    assert_eq!(z.len(), m_in);
    assert_eq!(zb.len(), 2 * n);

    // Fold finite bounds into extra inequality rows with fixed Jacobians.
    let mut bound_rows: Vec<(usize, f64)> = Vec::new(); // (variable, sign)
    for i in 0..n {
        if nlp.lower[i].is_finite() {
            bound_rows.push((i, 1.0));
        }
        if nlp.upper[i].is_finite() {
            bound_rows.push((i, -1.0));
        }
    }
    let mut full_ineq_rows = nlp.ineq.pattern.rows.clone();
    let mut full_ineq_vals: Vec<Vec<f64>> = nlp
        .ineq
        .pattern
        .rows
        .iter()
        .map(|r| vec![0.0; r.len()])
        .collect();
    for &(i, sign) in &bound_rows {
        full_ineq_rows.push(vec![i]);
        full_ineq_vals.push(vec![sign]);
    }
    let full_ineq_pattern = JacPattern {
        rows: full_ineq_rows,
    };
    let m_total_in = full_ineq_pattern.n_rows();

    let use_bfgs = settings.hessian_mode == HessianMode::DampedBfgs || nlp.hessian.is_none();
    let (h_pattern, mut h_values, mut bfgs) = if use_bfgs {
        let mut pattern = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                pattern.push((i, j));
            }
        }
        let values = vec![0.0; pattern.len()];
        (pattern, values, Some(nalgebra::DMatrix::<f64>::identity(n, n)))
    } else {
        let h = nlp.hessian.as_ref().unwrap();
        let values = vec![0.0; h.pattern.len()];
        (h.pattern.clone(), values, None)
    };

    let mut workspace = QpWorkspace::new(n, &h_pattern, &nlp.eq.pattern, &full_ineq_pattern);
    let mut delta = 0.0f64;
    let mut penalty = 1.0f64;
    let mut stats = SolveStats {
        iterations: 0,
        qp_iterations: 0,
        restorations: 0,
        kkt_residual: f64::INFINITY,
        wall_time: std::time::Duration::ZERO,
    };
    if let Some(w) = warm {
        let mult_inf = inf_norm(&w.y_eq).max(inf_norm(&w.z_ineq)).max(inf_norm(&w.z_bounds));
        penalty = penalty.max(mult_inf * settings.penalty_growth);
    }

    let mut status = SolveStatus::MaxIterations;
    // State carried across iterations for the BFGS update.
    let mut prev_for_bfgs: Option<(Vec<f64>, Evaluation)> = None;

    for iter in 0..settings.max_iterations {
        stats.iterations = iter;
        let eval = evaluate(nlp, &x);

        // Deferred BFGS update: gradients of the Lagrangian at the previous
        // and current point, both with the current multipliers.
        if let (Some(b), Some((x_prev, eval_prev))) = (bfgs.as_mut(), prev_for_bfgs.take()) {
            bfgs_update(
                b, nlp, &x_prev, &eval_prev, &x, &eval, &y, &z, &zb,
            );
        }

        let kkt = kkt_residual(nlp, &x, &y, &z, &zb);
        stats.kkt_residual = kkt.scaled;
        if settings.verbose {
            eprintln!(
                "sqp it {iter:3}: f {:<13.6e} kkt {:<9.3e} (stat {:.1e} eq {:.1e} in {:.1e} comp {:.1e}) pen {penalty:.1e} delta {delta:.1e}",
                eval.f, kkt.scaled, kkt.stationarity, kkt.eq_violation, kkt.ineq_violation, kkt.complementarity
            );
        }
        if kkt.scaled <= settings.kkt_tolerance {
            status = SolveStatus::Converged;
            break;
        }

        // Hessian model values.
        if let Some(b) = bfgs.as_ref() {
            let mut k = 0;
            for i in 0..n {
                for j in 0..=i {
                    h_values[k] = b[(i, j)];
                    k += 1;
                }
            }
        } else {
            let h = nlp.hessian.as_ref().unwrap();
            (h.eval)(&x, &mut h_values);
        }

        // Combined inequality values (user rows then bound rows).
        let mut c_in_full = Vec::with_capacity(m_total_in);
        c_in_full.extend_from_slice(&eval.c_in);
        for &(i, sign) in &bound_rows {
            let c = if sign > 0.0 {
                x[i] - nlp.lower[i]
            } else {
                nlp.upper[i] - x[i]
            };
            c_in_full.push(c);
        }
        let mut jac_in_full = JacValues {
            rows: full_ineq_vals.clone(),
        };
        for (row, src) in jac_in_full.rows.iter_mut().zip(eval.jac_in.rows.iter()) {
            row.copy_from_slice(src);
        }
        for (k, &(_i, sign)) in bound_rows.iter().enumerate() {
            jac_in_full.rows[m_in + k][0] = sign;
        }

        let inputs = QpInputs {
            dim: n,
            h_pattern: &h_pattern,
            h_values: &h_values,
            grad: &eval.grad,
            eq_pattern: &nlp.eq.pattern,
            eq_jac: &eval.jac_eq,
            eq_rhs: &eval.c_eq,
            ineq_pattern: &full_ineq_pattern,
            ineq_jac: &jac_in_full,
            ineq_rhs: &c_in_full,
        };

        let mut outcome = workspace.solve(&inputs, &settings.qp, None, &mut delta);
        stats.qp_iterations += outcome.iterations;
        if settings.verbose {
            eprintln!(
                "       qp: {:?} in {} iterations, residual {:.3e}",
                outcome.status, outcome.iterations, outcome.residual
            );
        }
        if outcome.status == QpStatus::Infeasible
            || (outcome.status == QpStatus::MaxIter && outcome.residual > 1e-6)
        {
            // Feasibility restoration: elastic relaxation of all constraints.
            let elastic_penalty = (100.0 * penalty).max(1e4);
            outcome = workspace.solve(&inputs, &settings.qp, Some(elastic_penalty), &mut delta);
            stats.qp_iterations += outcome.iterations;
            stats.restorations += 1;
            if settings.verbose {
                eprintln!(
                    "       elastic qp (pen {elastic_penalty:.1e}): {:?} in {} iterations, residual {:.3e}",
                    outcome.status, outcome.iterations, outcome.residual
                );
            }
            if outcome.status == QpStatus::Infeasible {
                status = SolveStatus::InfeasibleQp;
                break;
            }
        }

        let d = outcome.step;
        let y_new = outcome.y;
        let (z_new, zb_new) = split_ineq_multipliers(&outcome.z, m_in, &bound_rows, n);

        // Convergence is measured at (x_k, lambda_{k+1}): the fresh QP
        // multipliers are the correct ones when the step has shrunk to zero,
        // e.g. at degenerate active sets. Interior-point multipliers carry
        // O(sqrt(mu)) noise on degenerately active rows, so a copy with tiny
        // entries zeroed is also tried; a pass with cleaned multipliers is
        // still a valid KKT certificate.
        if let Some((yc, zc, zbc, kkt_val)) =
            certify(nlp, &x, &y_new, &z_new, &zb_new, settings.kkt_tolerance)
        {
            y = yc;
            z = zc;
            zb = zbc;
            stats.kkt_residual = kkt_val;
            status = SolveStatus::Converged;
            break;
        }

        let step_norm = inf_norm(&d);
        if step_norm <= 1e-14 * (1.0 + inf_norm(&x)) {
            y = y_new;
            z = z_new;
            zb = zb_new;
            status = SolveStatus::MaxIterations;
            break;
        }

        // Exact-penalty parameter must dominate the multipliers.
        let mult_inf = inf_norm(&y_new).max(inf_norm(&z_new)).max(inf_norm(&zb_new));
        if penalty < mult_inf {
            penalty = mult_inf * settings.penalty_growth;
        }

        let viol0 = violation_l1(nlp, &x, &eval.c_eq, &eval.c_in);
        let grad_dot_d: f64 = eval.grad.iter().zip(d.iter()).map(|(g, di)| g * di).sum();
        let mut directional = grad_dot_d - penalty * viol0;
        if directional >= 0.0 {
            penalty = penalty * 10.0 + 1.0;
            directional = grad_dot_d - penalty * viol0;
        }

        let merit0 = eval.f + penalty * viol0;
        let merit_of = |alpha: f64| -> f64 {
            let xt: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + alpha * di).collect();
            let ft = (nlp.objective)(&xt);
            let mut ce = vec![0.0; m_eq];
            (nlp.eq.eval)(&xt, &mut ce);
            let mut ci = vec![0.0; m_in];
            (nlp.ineq.eval)(&xt, &mut ci);
            ft + penalty * violation_l1(nlp, &xt, &ce, &ci)
        };

        let alpha = match merit_line_search(
            merit_of,
            merit0,
            directional,
            settings.backtrack_ratio,
            settings.armijo_constant,
            1e-11,
        ) {
            Ok(a) => a,
            Err(e) => {
                if settings.verbose {
                    eprintln!(
                        "       line search failed ({e}); step inf-norm {:.3e}, directional {:.3e}",
                        step_norm, directional
                    );
                }
                status = SolveStatus::LineSearchFailure;
                break;
            }
        };
        if settings.verbose {
            eprintln!("       alpha {alpha:.3e}, step inf-norm {step_norm:.3e}");
        }

        let x_prev = x.clone();
        for i in 0..n {
            x[i] += alpha * d[i];
        }
        clamp_to_bounds(nlp, &mut x);
        for (yi, yn) in y.iter_mut().zip(y_new.iter()) {
            *yi += alpha * (yn - *yi);
        }
        for (zi, zn) in z.iter_mut().zip(z_new.iter()) {
            *zi += alpha * (zn - *zi);
        }
        for (zi, zn) in zb.iter_mut().zip(zb_new.iter()) {
            *zi += alpha * (zn - *zi);
        }

        if bfgs.is_some() {
            prev_for_bfgs = Some((x_prev, eval));
        }
    }

    if status == SolveStatus::MaxIterations || status == SolveStatus::LineSearchFailure {
        // One final check: the last step may have landed on the solution.
        if let Some((yc, zc, zbc, kkt_val)) =
            certify(nlp, &x, &y, &z, &zb, settings.kkt_tolerance)
        {
            y = yc;
            z = zc;
            zb = zbc;
            stats.kkt_residual = kkt_val;
            status = SolveStatus::Converged;
        } else {
            stats.kkt_residual = kkt_residual(nlp, &x, &y, &z, &zb).scaled;
        }
    }

    stats.wall_time = start_time.elapsed();
    SolveResult {
        x,
        y_eq: y,
        z_ineq: z,
        z_bounds: zb,
        status,
        stats,
    }
}

/// Try to certify (x, multipliers) as a KKT point, first as-is and then with
/// small inequality multipliers zeroed out.
fn certify(
    nlp: &Nlp,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    zb: &[f64],
    tol: f64,
) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let kkt = kkt_residual(nlp, x, y, z, zb);
    if kkt.scaled <= tol {
        return Some((y.to_vec(), z.to_vec(), zb.to_vec(), kkt.scaled));
    }
    let mult_inf = inf_norm(y).max(inf_norm(z)).max(inf_norm(zb));
    let threshold = 1e-4 * (1.0 + mult_inf);
    let clean = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&m| if m.abs() <= threshold { 0.0 } else { m })
            .collect()
    };
    let zc = clean(z);
    let zbc = clean(zb);
    if zc == z && zbc == zb {
        return None;
    }
    let kkt = kkt_residual(nlp, x, y, &zc, &zbc);
    if kkt.scaled <= tol {
        return Some((y.to_vec(), zc, zbc, kkt.scaled));
    }
    None
}

fn split_ineq_multipliers(
    z_full: &[f64],
    m_in: usize,
    bound_rows: &[(usize, f64)],
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let z_user = z_full[..m_in].to_vec();
    let mut zb = vec![0.0; 2 * n];
    for (k, &(i, sign)) in bound_rows.iter().enumerate() {
        if sign > 0.0 {
            zb[2 * i] = z_full[m_in + k];
        } else {
            zb[2 * i + 1] = z_full[m_in + k];
        }
    }
    (z_user, zb)
}

#[allow(clippy::too_many_arguments)]
fn bfgs_update(
    b: &mut nalgebra::DMatrix<f64>,
    nlp: &Nlp,
    x_prev: &[f64],
    eval_prev: &Evaluation,
    x: &[f64],
    eval: &Evaluation,
    y: &[f64],
    z: &[f64],
    zb: &[f64],
) {
    let n = nlp.dim;
    let lag_grad = |ev: &Evaluation| -> Vec<f64> {
        let mut g = ev.grad.clone();
        for (r, (cols, vals)) in nlp
            .eq
            .pattern
            .rows
            .iter()
            .zip(ev.jac_eq.rows.iter())
            .enumerate()
        {
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                g[c] -= v * y[r];
            }
        }
        for (i, (cols, vals)) in nlp
            .ineq
            .pattern
            .rows
            .iter()
            .zip(ev.jac_in.rows.iter())
            .enumerate()
        {
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                g[c] -= v * z[i];
            }
        }
        for i in 0..n {
            g[i] -= zb[2 * i];
            g[i] += zb[2 * i + 1];
        }
        g
    };

    let s: Vec<f64> = x.iter().zip(x_prev.iter()).map(|(a, b)| a - b).collect();
    let s_norm = inf_norm(&s);
    if s_norm < 1e-14 {
        return;
    }
    let g_new = lag_grad(eval);
    let g_old = lag_grad(eval_prev);
    let yv: Vec<f64> = g_new.iter().zip(g_old.iter()).map(|(a, b)| a - b).collect();

    let sv = nalgebra::DVector::from_vec(s);
    let yvn = nalgebra::DVector::from_vec(yv);
    let bs = &*b * &sv;
    let s_bs = sv.dot(&bs);
    let s_y = sv.dot(&yvn);
    if s_bs <= 0.0 {
        return;
    }
    // Powell damping keeps the update positive definite.
    let theta = if s_y < 0.2 * s_bs {
        0.8 * s_bs / (s_bs - s_y)
    } else {
        1.0
    };
    let r = &yvn * theta + &bs * (1.0 - theta);
    let s_r = sv.dot(&r);
    if s_r <= 1e-16 * s_bs.max(1.0) {
        return;
    }
    let b_update = &r * r.transpose() / s_r - &bs * bs.transpose() / s_bs;
    *b += b_update;
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ConstraintBlock;

    #[test]
    fn full_newton_step_accepted_on_quadratic() {
        // f = 1/2 x^2 from x = 1, Newton step d = -1.
        let merit = |alpha: f64| 0.5 * (1.0 - alpha) * (1.0 - alpha);
        let got = merit_line_search(merit, 0.5, -1.0, 0.5, 1e-4, 1e-11).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn doubled_step_is_cut_back() {
        // Same quadratic but the step is doubled: the full step gives no
        // decrease, half of it lands on the minimizer.
        let merit = |alpha: f64| 0.5 * (1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha);
        let got = merit_line_search(merit, 0.5, -2.0, 0.5, 1e-4, 1e-11).unwrap();
        assert!(got <= 0.5 + 1e-12);
        assert!(merit(got) < 0.5);
    }

    #[test]
    fn zero_step_is_rejected() {
        let err = merit_line_search(|_| 1.0, 1.0, 0.0, 0.5, 1e-4, 1e-11).unwrap_err();
        assert_eq!(err, LineSearchError::NoDescent);
    }

    #[test]
    fn simple_bound_constrained_minimum() {
        // min x^2 s.t. x >= 1 (spec-level smoke test; the full regression
        // battery lives in tests/analytic.rs).
        let nlp = Nlp::new(
            1,
            |x: &[f64]| x[0] * x[0],
            |x: &[f64], g: &mut [f64]| g[0] = 2.0 * x[0],
        )
        .with_bounds(vec![1.0], vec![f64::INFINITY])
        .with_x0(vec![3.0]);
        let result = solve(&nlp, &SolverSettings::default(), None);
        assert_eq!(result.status, SolveStatus::Converged);
        assert!((result.x[0] - 1.0).abs() < 1e-6);
        let kkt = kkt_residual(&nlp, &result.x, &result.y_eq, &result.z_ineq, &result.z_bounds);
        assert!(kkt.scaled <= 1e-6);
    }

    #[test]
    fn equality_constrained_circle() {
        // min x + y s.t. x^2 + y^2 = 1 -> (-sqrt(2)/2, -sqrt(2)/2).
        let eq = ConstraintBlock::from_dense(
            1,
            2,
            |x: &[f64], out: &mut [f64]| out[0] = x[0] * x[0] + x[1] * x[1] - 1.0,
            |x: &[f64], jac: &mut [f64]| {
                jac[0] = 2.0 * x[0];
                jac[1] = 2.0 * x[1];
            },
        );
        let nlp = Nlp::new(
            2,
            |x: &[f64]| x[0] + x[1],
            |_x: &[f64], g: &mut [f64]| {
                g[0] = 1.0;
                g[1] = 1.0;
            },
        )
        .with_eq(eq)
        .with_x0(vec![0.5, -0.8]);
        let result = solve(&nlp, &SolverSettings::default(), None);
        assert_eq!(result.status, SolveStatus::Converged);
        let r = 0.5f64.sqrt();
        assert!((result.x[0] + r).abs() < 1e-6, "x = {:?}", result.x);
        assert!((result.x[1] + r).abs() < 1e-6);
    }

    #[test]
    fn identical_inputs_give_identical_iterates() {
        let mk = || {
            Nlp::new(
                2,
                |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
                |x: &[f64], g: &mut [f64]| {
                    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
                    g[1] = 200.0 * (x[1] - x[0] * x[0]);
                },
            )
            .with_x0(vec![-1.2, 1.0])
        };
        let a = solve(&mk(), &SolverSettings::default(), None);
        let b = solve(&mk(), &SolverSettings::default(), None);
        assert_eq!(a.x, b.x);
        assert_eq!(a.stats.iterations, b.stats.iterations);
    }
}
