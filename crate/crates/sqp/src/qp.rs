//! Primal-dual interior-point method for convex QP subproblems.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 d^T H d + g^T d
//!     subject to  J_eq d + c_eq  = 0
//!                 J_in d + c_in >= 0
//! ```
//!
//! where H is a (regularized) symmetric positive semidefinite model. The
//! Newton systems are condensed onto (d, y_eq) and factorized as a banded
//! quasi-definite LDL^T using the interleaved ordering from [`crate::kkt`].
//!
//! Elastic mode relaxes every constraint with l1-penalized slacks, which
//! makes the subproblem feasible by construction; it is used as the
//! feasibility-restoration step when the plain subproblem is infeasible.
//! The elastic slacks are eliminated analytically, so both modes share one
//! KKT structure: elastic rows only change the per-row scalar weights.

use crate::banded::{BandedLdl, BandedSym, FactorError};
use crate::kkt::KktOrdering;
use crate::problem::{JacPattern, JacValues};

#[derive(Debug, Clone, Copy)]
pub struct QpSettings {
    /// Relative KKT tolerance of the subproblem.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub tau: f64,
    /// Dual regularization added to the equality block.
    pub dual_reg: f64,
    /// Smallest primal regularization tried when the Hessian model needs
    /// an inertia correction.
    pub reg_floor: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100,
            tau: 0.995,
            dual_reg: 1e-9,
            reg_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct QpOutcome {
    /// Primal step d.
    pub step: Vec<f64>,
    /// Equality multipliers, gradient-side convention:
    /// `H d + g = J_eq^T y + J_in^T z` at the solution.
    pub y: Vec<f64>,
    /// Inequality multipliers, `z >= 0`.
    pub z: Vec<f64>,
    pub iterations: usize,
    /// Final scaled KKT residual (max of primal/dual/complementarity).
    pub residual: f64,
    pub status: QpStatus,
}

/// Borrowed view of one QP subproblem.
pub struct QpInputs<'a> {
    pub dim: usize,
    /// Lower triangle of H, parallel `(row, col)` / value arrays.
    pub h_pattern: &'a [(usize, usize)],
    pub h_values: &'a [f64],
    pub grad: &'a [f64],
    pub eq_pattern: &'a JacPattern,
    pub eq_jac: &'a JacValues,
    /// Equality residuals c_eq (rows read `J d + c = 0`).
    pub eq_rhs: &'a [f64],
    pub ineq_pattern: &'a JacPattern,
    pub ineq_jac: &'a JacValues,
    /// Inequality residuals c_in (rows read `J d + c >= 0`).
    pub ineq_rhs: &'a [f64],
}

/// Reusable factorization workspace; rebuild when the sparsity changes.
pub struct QpWorkspace {
    ordering: KktOrdering,
    kkt: BandedSym,
    rhs: Vec<f64>,
}

impl QpWorkspace {
    pub fn new(dim: usize, h_pattern: &[(usize, usize)], eq: &JacPattern, ineq: &JacPattern) -> Self {
        let ordering = KktOrdering::build(
            dim,
            h_pattern,
            eq,
            ineq.rows.iter().map(|r| r.as_slice()),
        );
        let kkt = BandedSym::zeros(ordering.total(), ordering.bandwidth);
        let rhs = vec![0.0; ordering.total()];
        Self { ordering, kkt, rhs }
    }

    pub fn bandwidth(&self) -> usize {
        self.ordering.bandwidth
    }

    /// Solve one QP subproblem. `elastic` switches on l1 feasibility
    /// relaxation of all constraints with the given penalty. `delta` is the
    /// primal regularization; it is increased in place when the inertia of
    /// the KKT matrix is wrong and the final value is left for reuse.
    pub fn solve(
        &mut self,
        inp: &QpInputs,
        settings: &QpSettings,
        elastic: Option<f64>,
        delta: &mut f64,
    ) -> QpOutcome {
        let n = inp.dim;
        let m_eq = inp.eq_pattern.n_rows();
        let m_in = inp.ineq_pattern.n_rows();
        debug_assert_eq!(self.ordering.n_vars, n);
        debug_assert_eq!(self.ordering.m_eq, m_eq);

        let penalty = elastic.unwrap_or(f64::INFINITY);
        let is_elastic = elastic.is_some();

        let gnorm = inf_norm(inp.grad);
        let cnorm = inf_norm(inp.eq_rhs).max(inf_norm(inp.ineq_rhs));

        // Primal-dual state.
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; m_eq];
        let mut z = vec![0.0; m_in];
        let mut s = vec![0.0; m_in];
        let mut t = vec![0.0; m_in]; // elastic slack on inequalities
        let mut tp = vec![0.0; m_eq]; // elastic slack pair on equalities
        let mut tm = vec![0.0; m_eq];
        for i in 0..m_in {
            s[i] = inp.ineq_rhs[i].max(1.0);
            z[i] = if is_elastic { (0.5 * penalty).min(1.0) } else { 1.0 };
            if is_elastic {
                t[i] = (-inp.ineq_rhs[i]).max(0.0) + 1.0;
                s[i] = (inp.ineq_rhs[i] + t[i]).max(1.0);
            }
        }
        if is_elastic {
            for r in 0..m_eq {
                tp[r] = inp.eq_rhs[r].max(0.0) + 1.0;
                tm[r] = (-inp.eq_rhs[r]).max(0.0) + 1.0;
            }
        }

        // Complementarity pair count.
        let pairs = m_in
            + if is_elastic { m_in + 2 * m_eq } else { 0 };

        let mut iterations = 0usize;
        let mut residual = f64::INFINITY;
        // Last iterate with a finite residual, for graceful exits when the
        // barrier pushes the arithmetic over the edge.
        let mut last_good: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;

        // Scratch for the affine (predictor) direction.
        let mut dz_aff = vec![0.0; m_in];
        let mut ds_aff = vec![0.0; m_in];
        let mut dt_aff = vec![0.0; m_in];
        let mut dy_aff = vec![0.0; m_eq];
        let mut dtp_aff = vec![0.0; m_eq];
        let mut dtm_aff = vec![0.0; m_eq];

        for iter in 0..settings.max_iter {
            iterations = iter;

            // Residuals.
            let mut r_d = inp.grad.to_vec();
            add_sym_product(inp.h_pattern, inp.h_values, &d, &mut r_d);
            for (r, (cols, vals)) in inp
                .eq_pattern
                .rows
                .iter()
                .zip(inp.eq_jac.rows.iter())
                .enumerate()
            {
                for (&c, &v) in cols.iter().zip(vals.iter()) {
                    r_d[c] -= v * y[r];
                }
            }
            for (i, (cols, vals)) in inp
                .ineq_pattern
                .rows
                .iter()
                .zip(inp.ineq_jac.rows.iter())
                .enumerate()
            {
                for (&c, &v) in cols.iter().zip(vals.iter()) {
                    r_d[c] -= v * z[i];
                }
            }

            let mut r_eq = vec![0.0; m_eq];
            for r in 0..m_eq {
                r_eq[r] = row_dot(&inp.eq_pattern.rows[r], &inp.eq_jac.rows[r], &d)
                    + inp.eq_rhs[r]
                    - tp[r]
                    + tm[r];
            }
            let mut r_in = vec![0.0; m_in];
            for i in 0..m_in {
                r_in[i] = row_dot(&inp.ineq_pattern.rows[i], &inp.ineq_jac.rows[i], &d)
                    + inp.ineq_rhs[i]
                    + t[i]
                    - s[i];
            }

            let mut gap = 0.0;
            for i in 0..m_in {
                gap += s[i] * z[i];
                if is_elastic {
                    gap += t[i] * (penalty - z[i]);
                }
            }
            if is_elastic {
                for r in 0..m_eq {
                    gap += tp[r] * (penalty + y[r]) + tm[r] * (penalty - y[r]);
                }
            }
            let mu = if pairs > 0 { gap / pairs as f64 } else { 0.0 };

            let primal = inf_norm(&r_eq).max(inf_norm(&r_in)) / (1.0 + cnorm);
            let dual = inf_norm(&r_d) / (1.0 + gnorm);
            let compl = mu / (1.0 + gnorm);
            residual = primal.max(dual).max(compl);
            if !residual.is_finite() || inf_norm(&z) > 1e13 || inf_norm(&y) > 1e13 {
                // Arithmetic breakdown: recover the last finite iterate if
                // one exists, otherwise report the subproblem as infeasible
                // (diverging duals are the classic infeasibility signature).
                return match last_good {
                    Some((d, y, z, res)) => QpOutcome {
                        step: d,
                        y,
                        z,
                        iterations,
                        residual: res,
                        status: if res <= settings.tol.sqrt() {
                            QpStatus::MaxIter
                        } else {
                            QpStatus::Infeasible
                        },
                    },
                    None => QpOutcome {
                        step: vec![0.0; n],
                        y: vec![0.0; m_eq],
                        z: vec![0.0; m_in],
                        iterations,
                        residual: f64::INFINITY,
                        status: QpStatus::Infeasible,
                    },
                };
            }
            match &last_good {
                Some((_, _, _, res)) if *res <= residual => {}
                _ => last_good = Some((d.clone(), y.clone(), z.clone(), residual)),
            }
            if residual <= settings.tol {
                return QpOutcome {
                    step: d,
                    y,
                    z,
                    iterations,
                    residual,
                    status: QpStatus::Converged,
                };
            }
            // Infeasibility heuristic: barrier already tiny but the primal
            // residual refuses to move.
            if !is_elastic && pairs > 0 && compl < 1e-13 && primal > settings.tol.sqrt() {
                return QpOutcome {
                    step: d,
                    y,
                    z,
                    iterations,
                    residual,
                    status: QpStatus::Infeasible,
                };
            }

            // Per-row condensation weights (shared by predictor/corrector).
            let mut w = vec![0.0; m_in];
            for i in 0..m_in {
                w[i] = if is_elastic {
                    1.0 / (s[i] / z[i] + t[i] / (penalty - z[i]))
                } else {
                    z[i] / s[i]
                };
            }
            let mut e_diag = vec![0.0; m_eq];
            if is_elastic {
                for r in 0..m_eq {
                    e_diag[r] = tp[r] / (penalty + y[r]) + tm[r] / (penalty - y[r]);
                }
            }

            // Assemble + factorize, fixing inertia by raising delta.
            let factor = match self.factorize(inp, &w, &e_diag, settings, delta) {
                Some(f) => f,
                None => {
                    return QpOutcome {
                        step: d,
                        y,
                        z,
                        iterations,
                        residual,
                        status: QpStatus::Infeasible,
                    }
                }
            };

            // Predictor: sigma = 0, no corrector terms.
            let (dd_aff, dl_aff) = self.solve_step(
                inp, &factor, &r_d, &r_eq, &r_in, &w, &s, &z, &t, &tp, &tm, &y, penalty,
                is_elastic, 0.0, None,
            );
            for r in 0..m_eq {
                dy_aff[r] = -dl_aff[r];
            }
            recover_ineq_direction(
                inp, &dd_aff, &r_in, &w, &s, &z, &t, penalty, is_elastic, 0.0, None,
                &mut dz_aff, &mut ds_aff, &mut dt_aff,
            );
            if is_elastic {
                for r in 0..m_eq {
                    let rp = tp[r] * (penalty + y[r]);
                    let rm = tm[r] * (penalty - y[r]);
                    dtp_aff[r] = (-rp - tp[r] * dy_aff[r]) / (penalty + y[r]);
                    dtm_aff[r] = (-rm + tm[r] * dy_aff[r]) / (penalty - y[r]);
                }
            }

            // Centering parameter from the affine step.
            let sigma = if pairs > 0 {
                let ap = max_primal_step(&s, &ds_aff, &t, &dt_aff, &tp, &dtp_aff, &tm, &dtm_aff, 1.0);
                let ad = max_dual_step(&z, &dz_aff, &y, &dy_aff, penalty, is_elastic, m_in, 1.0);
                let mut gap_aff = 0.0;
                for i in 0..m_in {
                    gap_aff += (s[i] + ap * ds_aff[i]) * (z[i] + ad * dz_aff[i]);
                    if is_elastic {
                        gap_aff += (t[i] + ap * dt_aff[i]) * (penalty - z[i] - ad * dz_aff[i]);
                    }
                }
                if is_elastic {
                    for r in 0..m_eq {
                        gap_aff += (tp[r] + ap * dtp_aff[r]) * (penalty + y[r] + ad * dy_aff[r]);
                        gap_aff += (tm[r] + ap * dtm_aff[r]) * (penalty - y[r] - ad * dy_aff[r]);
                    }
                }
                let mu_aff = gap_aff / pairs as f64;
                ((mu_aff / mu).powi(3)).clamp(1e-8, 0.999)
            } else {
                0.0
            };

            // Corrector with Mehrotra second-order terms.
            let corr = CorrectorTerms {
                ds_dz: &ds_aff,
                dz: &dz_aff,
                dt: &dt_aff,
                dy: &dy_aff,
                dtp: &dtp_aff,
                dtm: &dtm_aff,
            };
            let (dd, dl) = self.solve_step(
                inp, &factor, &r_d, &r_eq, &r_in, &w, &s, &z, &t, &tp, &tm, &y, penalty,
                is_elastic, sigma * mu, Some(&corr),
            );
            let mut dy = vec![0.0; m_eq];
            for r in 0..m_eq {
                dy[r] = -dl[r];
            }
            let mut dz = vec![0.0; m_in];
            let mut ds = vec![0.0; m_in];
            let mut dt = vec![0.0; m_in];
            recover_ineq_direction(
                inp, &dd, &r_in, &w, &s, &z, &t, penalty, is_elastic, sigma * mu, Some(&corr),
                &mut dz, &mut ds, &mut dt,
            );
            let mut dtp = vec![0.0; m_eq];
            let mut dtm = vec![0.0; m_eq];
            if is_elastic {
                for r in 0..m_eq {
                    let rp = tp[r] * (penalty + y[r]) - sigma * mu + dtp_aff[r] * dy_aff[r];
                    let rm = tm[r] * (penalty - y[r]) - sigma * mu - dtm_aff[r] * dy_aff[r];
                    dtp[r] = (-rp - tp[r] * dy[r]) / (penalty + y[r]);
                    dtm[r] = (-rm + tm[r] * dy[r]) / (penalty - y[r]);
                }
            }

            let ap = max_primal_step(&s, &ds, &t, &dt, &tp, &dtp, &tm, &dtm, settings.tau);
            let ad = max_dual_step(&z, &dz, &y, &dy, penalty, is_elastic, m_in, settings.tau);

            for j in 0..n {
                d[j] += ap * dd[j];
            }
            for i in 0..m_in {
                s[i] += ap * ds[i];
                t[i] += ap * dt[i];
                z[i] += ad * dz[i];
            }
            for r in 0..m_eq {
                y[r] += ad * dy[r];
                tp[r] += ap * dtp[r];
                tm[r] += ap * dtm[r];
            }
        }

        let status = if residual <= settings.tol.sqrt() {
            QpStatus::MaxIter
        } else {
            QpStatus::Infeasible
        };
        QpOutcome {
            step: d,
            y,
            z,
            iterations,
            residual,
            status,
        }
    }

    fn factorize(
        &mut self,
        inp: &QpInputs,
        w: &[f64],
        e_diag: &[f64],
        settings: &QpSettings,
        delta: &mut f64,
    ) -> Option<BandedLdl> {
        let ord = &self.ordering;
        for _attempt in 0..60 {
            self.kkt.clear();
            for (&(i, j), &v) in inp.h_pattern.iter().zip(inp.h_values.iter()) {
                self.kkt.add(ord.var_pos[i], ord.var_pos[j], v);
            }
            for i in 0..ord.n_vars {
                self.kkt.add(ord.var_pos[i], ord.var_pos[i], *delta);
            }
            for (i, (cols, vals)) in inp
                .ineq_pattern
                .rows
                .iter()
                .zip(inp.ineq_jac.rows.iter())
                .enumerate()
            {
                let wi = w[i];
                for p in 0..cols.len() {
                    let cp = ord.var_pos[cols[p]];
                    let vp = vals[p];
                    for q in 0..=p {
                        self.kkt
                            .add(cp, ord.var_pos[cols[q]], wi * vp * vals[q]);
                    }
                }
            }
            for (r, (cols, vals)) in inp
                .eq_pattern
                .rows
                .iter()
                .zip(inp.eq_jac.rows.iter())
                .enumerate()
            {
                let pr = ord.eq_pos[r];
                for (&c, &v) in cols.iter().zip(vals.iter()) {
                    self.kkt.add(pr, ord.var_pos[c], v);
                }
                self.kkt.add(pr, pr, -(settings.dual_reg + e_diag[r]));
            }

            match BandedLdl::factorize(&self.kkt, 1e-300) {
                Ok(f) if f.negative_pivots() == ord.m_eq => return Some(f),
                Ok(_) | Err(FactorError::ZeroPivot(_)) => {
                    *delta = (*delta * 10.0).max(settings.reg_floor);
                    if *delta > 1e12 {
                        return None;
                    }
                }
            }
        }
        None
    }

    /// Assemble the condensed rhs for a given barrier target and solve.
    /// Returns (primal direction, lambda) with `dy = -lambda`.
    #[allow(clippy::too_many_arguments)]
    fn solve_step(
        &mut self,
        inp: &QpInputs,
        factor: &BandedLdl,
        r_d: &[f64],
        r_eq: &[f64],
        r_in: &[f64],
        w: &[f64],
        s: &[f64],
        z: &[f64],
        t: &[f64],
        tp: &[f64],
        tm: &[f64],
        y: &[f64],
        penalty: f64,
        is_elastic: bool,
        sigma_mu: f64,
        corr: Option<&CorrectorTerms>,
    ) -> (Vec<f64>, Vec<f64>) {
        let ord = &self.ordering;
        self.rhs.fill(0.0);
        for j in 0..ord.n_vars {
            self.rhs[ord.var_pos[j]] = -r_d[j];
        }
        for i in 0..inp.ineq_pattern.n_rows() {
            let beta = beta_row(
                i, r_in, s, z, t, penalty, is_elastic, sigma_mu, corr,
            );
            let wb = w[i] * beta;
            for (&c, &v) in inp.ineq_pattern.rows[i]
                .iter()
                .zip(inp.ineq_jac.rows[i].iter())
            {
                self.rhs[ord.var_pos[c]] += v * wb;
            }
        }
        for r in 0..ord.m_eq {
            let mut rhs_r = -r_eq[r];
            if is_elastic {
                let (cp, cm) = match corr {
                    Some(c) => (c.dtp[r] * c.dy[r], -c.dtm[r] * c.dy[r]),
                    None => (0.0, 0.0),
                };
                let rp = tp[r] * (penalty + y[r]) - sigma_mu + cp;
                let rm = tm[r] * (penalty - y[r]) - sigma_mu + cm;
                rhs_r += -rp / (penalty + y[r]) + rm / (penalty - y[r]);
            }
            self.rhs[ord.eq_pos[r]] = rhs_r;
        }

        let mut sol = self.rhs.clone();
        factor.solve_in_place(&mut sol);
        let mut dd = vec![0.0; ord.n_vars];
        for j in 0..ord.n_vars {
            dd[j] = sol[ord.var_pos[j]];
        }
        let mut lambda = vec![0.0; ord.m_eq];
        for r in 0..ord.m_eq {
            lambda[r] = sol[ord.eq_pos[r]];
        }
        (dd, lambda)
    }
}

struct CorrectorTerms<'a> {
    ds_dz: &'a [f64],
    dz: &'a [f64],
    dt: &'a [f64],
    dy: &'a [f64],
    dtp: &'a [f64],
    dtm: &'a [f64],
}

/// beta_i such that `dz_i = w_i * (beta_i - J_i dd)`.
#[allow(clippy::too_many_arguments)]
fn beta_row(
    i: usize,
    r_in: &[f64],
    s: &[f64],
    z: &[f64],
    t: &[f64],
    penalty: f64,
    is_elastic: bool,
    sigma_mu: f64,
    corr: Option<&CorrectorTerms>,
) -> f64 {
    let (corr_s, corr_t) = match corr {
        Some(c) => (c.ds_dz[i] * c.dz[i], -c.dt[i] * c.dz[i]),
        None => (0.0, 0.0),
    };
    let r_cs = s[i] * z[i] - sigma_mu + corr_s;
    if is_elastic {
        let r_ct = t[i] * (penalty - z[i]) - sigma_mu + corr_t;
        -r_in[i] + r_ct / (penalty - z[i]) - r_cs / z[i]
    } else {
        -r_in[i] - r_cs / z[i]
    }
}

#[allow(clippy::too_many_arguments)]
fn recover_ineq_direction(
    inp: &QpInputs,
    dd: &[f64],
    r_in: &[f64],
    w: &[f64],
    s: &[f64],
    z: &[f64],
    t: &[f64],
    penalty: f64,
    is_elastic: bool,
    sigma_mu: f64,
    corr: Option<&CorrectorTerms>,
    dz: &mut [f64],
    ds: &mut [f64],
    dt: &mut [f64],
) {
    for i in 0..inp.ineq_pattern.n_rows() {
        let jd = row_dot(&inp.ineq_pattern.rows[i], &inp.ineq_jac.rows[i], dd);
        let beta = beta_row(i, r_in, s, z, t, penalty, is_elastic, sigma_mu, corr);
        dz[i] = w[i] * (beta - jd);
        let (corr_s, corr_t) = match corr {
            Some(c) => (c.ds_dz[i] * c.dz[i], -c.dt[i] * c.dz[i]),
            None => (0.0, 0.0),
        };
        let r_cs = s[i] * z[i] - sigma_mu + corr_s;
        ds[i] = (-r_cs - s[i] * dz[i]) / z[i];
        if is_elastic {
            let r_ct = t[i] * (penalty - z[i]) - sigma_mu + corr_t;
            dt[i] = (-r_ct + t[i] * dz[i]) / (penalty - z[i]);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn max_primal_step(
    s: &[f64],
    ds: &[f64],
    t: &[f64],
    dt: &[f64],
    tp: &[f64],
    dtp: &[f64],
    tm: &[f64],
    dtm: &[f64],
    tau: f64,
) -> f64 {
    let mut alpha: f64 = 1.0;
    for (v, dv) in s
        .iter()
        .zip(ds.iter())
        .chain(t.iter().zip(dt.iter()))
        .chain(tp.iter().zip(dtp.iter()))
        .chain(tm.iter().zip(dtm.iter()))
    {
        if *dv < 0.0 {
            alpha = alpha.min(-tau * v / dv);
        }
    }
    alpha
}

fn max_dual_step(
    z: &[f64],
    dz: &[f64],
    y: &[f64],
    dy: &[f64],
    penalty: f64,
    is_elastic: bool,
    m_in: usize,
    tau: f64,
) -> f64 {
    let mut alpha: f64 = 1.0;
    for i in 0..m_in {
        if dz[i] < 0.0 {
            alpha = alpha.min(-tau * z[i] / dz[i]);
        }
        if is_elastic && dz[i] > 0.0 {
            alpha = alpha.min(tau * (penalty - z[i]) / dz[i]);
        }
    }
    if is_elastic {
        for (v, dv) in y.iter().zip(dy.iter()) {
            if *dv > 0.0 {
                alpha = alpha.min(tau * (penalty - v) / dv);
            } else if *dv < 0.0 {
                alpha = alpha.min(-tau * (penalty + v) / dv);
            }
        }
    }
    alpha
}

fn inf_norm(v: &[f64]) -> f64 {
    // NaN must poison the norm, not vanish in the max.
    v.iter().fold(0.0, |acc, x| {
        if x.is_nan() {
            f64::INFINITY
        } else {
            acc.max(x.abs())
        }
    })
}

fn row_dot(cols: &[usize], vals: &[f64], x: &[f64]) -> f64 {
    cols.iter()
        .zip(vals.iter())
        .map(|(&c, &v)| v * x[c])
        .sum()
}

/// y += H x for a symmetric matrix in lower-triangular triplet form.
fn add_sym_product(pattern: &[(usize, usize)], values: &[f64], x: &[f64], y: &mut [f64]) {
    for (&(i, j), &v) in pattern.iter().zip(values.iter()) {
        y[i] += v * x[j];
        if i != j {
            y[j] += v * x[i];
        }
    }
}

/// Dense convenience wrapper: minimize 1/2 x^T H x + g^T x subject to
/// `A_eq x = b_eq`, `A_in x >= b_in` and box bounds. Bounds are folded into
/// the inequality rows. Intended for small problems and tests; large
/// structured problems should construct sparse inputs directly.
pub struct DenseQp {
    pub h: nalgebra::DMatrix<f64>,
    pub g: Vec<f64>,
    pub a_eq: nalgebra::DMatrix<f64>,
    pub b_eq: Vec<f64>,
    pub a_in: nalgebra::DMatrix<f64>,
    pub b_in: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseQp {
    pub fn unconstrained(h: nalgebra::DMatrix<f64>, g: Vec<f64>) -> Self {
        let n = g.len();
        Self {
            h,
            g,
            a_eq: nalgebra::DMatrix::zeros(0, n),
            b_eq: vec![],
            a_in: nalgebra::DMatrix::zeros(0, n),
            b_in: vec![],
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }
}

pub fn solve_dense_qp(qp: &DenseQp, settings: &QpSettings) -> QpOutcome {
    let n = qp.g.len();
    let mut h_pattern = Vec::new();
    let mut h_values = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let v = qp.h[(i, j)];
            if v != 0.0 || i == j {
                h_pattern.push((i, j));
                h_values.push(v);
            }
        }
    }
    let eq_pattern = JacPattern::dense(qp.a_eq.nrows(), n);
    let mut eq_jac = JacValues::zeros_like(&eq_pattern);
    let mut eq_rhs = vec![0.0; qp.a_eq.nrows()];
    for r in 0..qp.a_eq.nrows() {
        for c in 0..n {
            eq_jac.rows[r][c] = qp.a_eq[(r, c)];
        }
        eq_rhs[r] = -qp.b_eq[r];
    }

    let mut ineq_rows = Vec::new();
    let mut ineq_vals = Vec::new();
    let mut ineq_rhs = Vec::new();
    for r in 0..qp.a_in.nrows() {
        ineq_rows.push((0..n).collect::<Vec<_>>());
        ineq_vals.push((0..n).map(|c| qp.a_in[(r, c)]).collect::<Vec<_>>());
        ineq_rhs.push(-qp.b_in[r]);
    }
    for i in 0..n {
        if qp.lower[i].is_finite() {
            ineq_rows.push(vec![i]);
            ineq_vals.push(vec![1.0]);
            ineq_rhs.push(-qp.lower[i]);
        }
        if qp.upper[i].is_finite() {
            ineq_rows.push(vec![i]);
            ineq_vals.push(vec![-1.0]);
            ineq_rhs.push(qp.upper[i]);
        }
    }
    let ineq_pattern = JacPattern { rows: ineq_rows };
    let ineq_jac = JacValues { rows: ineq_vals };

    let inputs = QpInputs {
        dim: n,
        h_pattern: &h_pattern,
        h_values: &h_values,
        grad: &qp.g,
        eq_pattern: &eq_pattern,
        eq_jac: &eq_jac,
        eq_rhs: &eq_rhs,
        ineq_pattern: &ineq_pattern,
        ineq_jac: &ineq_jac,
        ineq_rhs: &ineq_rhs,
    };
    let mut ws = QpWorkspace::new(n, &h_pattern, &eq_pattern, &ineq_pattern);
    let mut delta = 0.0;
    let mut out = ws.solve(&inputs, settings, None, &mut delta);
    if out.status == QpStatus::Converged {
        polish_active_set(qp, &inputs, &mut out);
    }
    out
}

/// One direct KKT solve on the active set detected by the interior-point
/// iteration. Small dense problems get LU-exact primal/dual values this way,
/// which in particular removes the O(sqrt(mu)) fuzz on degenerate rows.
fn polish_active_set(qp: &DenseQp, inputs: &QpInputs, out: &mut QpOutcome) {
    use nalgebra::{DMatrix, DVector};
    let n = inputs.dim;
    let m_eq = inputs.eq_pattern.n_rows();
    let m_in = inputs.ineq_pattern.n_rows();

    let mut active = Vec::new();
    for i in 0..m_in {
        let slack =
            row_dot(&inputs.ineq_pattern.rows[i], &inputs.ineq_jac.rows[i], &out.step)
                + inputs.ineq_rhs[i];
        if out.z[i] >= slack.abs() {
            active.push(i);
        }
    }
    let k = active.len();
    let dim = n + m_eq + k;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = qp.h[(i, j)];
        }
        rhs[i] = -inputs.grad[i];
    }
    for r in 0..m_eq {
        for (&c, &v) in inputs.eq_pattern.rows[r]
            .iter()
            .zip(inputs.eq_jac.rows[r].iter())
        {
            kkt[(n + r, c)] = v;
            kkt[(c, n + r)] = -v;
        }
        rhs[n + r] = -inputs.eq_rhs[r];
    }
    for (s, &i) in active.iter().enumerate() {
        for (&c, &v) in inputs.ineq_pattern.rows[i]
            .iter()
            .zip(inputs.ineq_jac.rows[i].iter())
        {
            kkt[(n + m_eq + s, c)] = v;
            kkt[(c, n + m_eq + s)] = -v;
        }
        rhs[n + m_eq + s] = -inputs.ineq_rhs[i];
    }

    let Some(sol) = kkt.lu().solve(&rhs) else {
        return;
    };
    // Validate: nonnegative active multipliers, feasible inactive rows.
    for s in 0..k {
        if sol[n + m_eq + s] < -1e-9 {
            return;
        }
    }
    let step: Vec<f64> = (0..n).map(|j| sol[j]).collect();
    for i in 0..m_in {
        let v = row_dot(&inputs.ineq_pattern.rows[i], &inputs.ineq_jac.rows[i], &step)
            + inputs.ineq_rhs[i];
        if v < -1e-9 {
            return;
        }
    }
    out.step = step;
    for r in 0..m_eq {
        out.y[r] = sol[n + r];
    }
    out.z.fill(0.0);
    for (s, &i) in active.iter().enumerate() {
        out.z[i] = sol[n + m_eq + s].max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn settings() -> QpSettings {
        QpSettings::default()
    }

    #[test]
    fn unconstrained_newton_step() {
        // min 1/2 |x|^2 - e^T x  ->  x = e
        let n = 4;
        let qp = DenseQp::unconstrained(DMatrix::identity(n, n), vec![-1.0; n]);
        let out = solve_dense_qp(&qp, &settings());
        assert_eq!(out.status, QpStatus::Converged);
        for j in 0..n {
            assert!((out.step[j] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn equality_projection() {
        // min 1/2 |x|^2 s.t. x_0 = 1  ->  x = (1, 0, 0)
        let n = 3;
        let mut qp = DenseQp::unconstrained(DMatrix::identity(n, n), vec![0.0; n]);
        qp.a_eq = DMatrix::from_row_slice(1, n, &[1.0, 0.0, 0.0]);
        qp.b_eq = vec![1.0];
        let out = solve_dense_qp(&qp, &settings());
        assert_eq!(out.status, QpStatus::Converged);
        assert!((out.step[0] - 1.0).abs() < 1e-8);
        assert!(out.step[1].abs() < 1e-8);
        assert!(out.step[2].abs() < 1e-8);
        // Gradient-side multiplier: H x = A^T y  ->  y = 1.
        assert!((out.y[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn active_bound_with_multiplier() {
        // min x^2 s.t. x >= 1: x* = 1, z* = 2.
        let mut qp = DenseQp::unconstrained(DMatrix::from_row_slice(1, 1, &[2.0]), vec![0.0]);
        qp.lower = vec![1.0];
        let out = solve_dense_qp(&qp, &settings());
        assert_eq!(out.status, QpStatus::Converged);
        assert!((out.step[0] - 1.0).abs() < 1e-8);
        assert!((out.z[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn inactive_constraints_get_zero_multipliers() {
        // min (x-2)^2 with x <= 10: unconstrained optimum interior.
        let mut qp = DenseQp::unconstrained(DMatrix::from_row_slice(1, 1, &[2.0]), vec![-4.0]);
        qp.upper = vec![10.0];
        let out = solve_dense_qp(&qp, &settings());
        assert_eq!(out.status, QpStatus::Converged);
        assert!((out.step[0] - 2.0).abs() < 1e-7);
        assert!(out.z[0].abs() < 1e-7);
    }

    #[test]
    fn infeasible_rows_detected_and_elastic_recovers() {
        // x >= 1 and -x >= 1 cannot hold simultaneously.
        let mut qp = DenseQp::unconstrained(DMatrix::from_row_slice(1, 1, &[1.0]), vec![0.0]);
        qp.a_in = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        qp.b_in = vec![1.0, 1.0];
        let out = solve_dense_qp(&qp, &settings());
        assert_eq!(out.status, QpStatus::Infeasible);

        // Elastic relaxation balances the two violated rows around x = 0.
        let n = 1;
        let h_pattern = vec![(0, 0)];
        let h_values = vec![1.0];
        let eq_pattern = JacPattern::empty();
        let eq_jac = JacValues::default();
        let ineq_pattern = JacPattern {
            rows: vec![vec![0], vec![0]],
        };
        let ineq_jac = JacValues {
            rows: vec![vec![1.0], vec![-1.0]],
        };
        let ineq_rhs = vec![-1.0, -1.0];
        let inputs = QpInputs {
            dim: n,
            h_pattern: &h_pattern,
            h_values: &h_values,
            grad: &[0.0],
            eq_pattern: &eq_pattern,
            eq_jac: &eq_jac,
            eq_rhs: &[],
            ineq_pattern: &ineq_pattern,
            ineq_jac: &ineq_jac,
            ineq_rhs: &ineq_rhs,
        };
        let mut ws = QpWorkspace::new(n, &h_pattern, &eq_pattern, &ineq_pattern);
        let mut delta = 0.0;
        let out = ws.solve(&inputs, &settings(), Some(100.0), &mut delta);
        assert_eq!(out.status, QpStatus::Converged);
        assert!(out.step[0].abs() < 1e-6, "step {}", out.step[0]);
    }

    #[test]
    fn repeated_solves_are_deterministic() {
        let mut qp = DenseQp::unconstrained(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            vec![-1.0, -2.0],
        );
        qp.a_in = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        qp.b_in = vec![0.5];
        let a = solve_dense_qp(&qp, &settings());
        let b = solve_dense_qp(&qp, &settings());
        assert_eq!(a.step, b.step);
        assert_eq!(a.z, b.z);
    }
}
