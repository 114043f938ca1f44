//! Central finite-difference verification of user-supplied derivatives.

use crate::problem::{JacValues, Nlp};

/// Location of the worst derivative mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivLocation {
    Gradient { var: usize },
    EqJacobian { row: usize, var: usize },
    IneqJacobian { row: usize, var: usize },
}

impl std::fmt::Display for DerivLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DerivLocation::Gradient { var } => write!(f, "objective gradient entry {var}"),
            DerivLocation::EqJacobian { row, var } => {
                write!(f, "equality Jacobian entry ({row}, {var})")
            }
            DerivLocation::IneqJacobian { row, var } => {
                write!(f, "inequality Jacobian entry ({row}, {var})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DerivReport {
    pub max_rel_error: f64,
    pub worst: DerivLocation,
    /// Analytic and finite-difference values at the worst entry.
    pub analytic: f64,
    pub finite_difference: f64,
}

fn rel_err(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / 1.0f64.max(a.abs()).max(fd.abs())
}

/// Compare analytic gradient and Jacobians against central differences with
/// step `perturbation`. Every dense entry is checked, including entries the
/// sparsity pattern claims are zero, so missing pattern entries are caught.
pub fn derivative_check(nlp: &Nlp, x: &[f64], perturbation: f64) -> DerivReport {
    let n = nlp.dim;
    let m_eq = nlp.n_eq();
    let m_in = nlp.n_ineq();

    let mut grad = vec![0.0; n];
    (nlp.gradient)(x, &mut grad);
    let mut jac_eq = JacValues::zeros_like(&nlp.eq.pattern);
    (nlp.eq.jac)(x, &mut jac_eq);
    let mut jac_in = JacValues::zeros_like(&nlp.ineq.pattern);
    (nlp.ineq.jac)(x, &mut jac_in);

    // Column-indexed analytic Jacobians (off-pattern entries are zero).
    let mut eq_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, (cols, vals)) in nlp
        .eq
        .pattern
        .rows
        .iter()
        .zip(jac_eq.rows.iter())
        .enumerate()
    {
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            eq_cols[c].push((r, v));
        }
    }
    let mut in_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, (cols, vals)) in nlp
        .ineq
        .pattern
        .rows
        .iter()
        .zip(jac_in.rows.iter())
        .enumerate()
    {
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            in_cols[c].push((r, v));
        }
    }

    let mut report = DerivReport {
        max_rel_error: 0.0,
        worst: DerivLocation::Gradient { var: 0 },
        analytic: grad.first().copied().unwrap_or(0.0),
        finite_difference: 0.0,
    };
    let record = |err: f64, loc: DerivLocation, a: f64, fd: f64, rep: &mut DerivReport| {
        if err > rep.max_rel_error {
            rep.max_rel_error = err;
            rep.worst = loc;
            rep.analytic = a;
            rep.finite_difference = fd;
        }
    };

    let mut xp = x.to_vec();
    let mut eq_p = vec![0.0; m_eq];
    let mut eq_m = vec![0.0; m_eq];
    let mut in_p = vec![0.0; m_in];
    let mut in_m = vec![0.0; m_in];
    let mut eq_fd = vec![0.0; m_eq];
    let mut in_fd = vec![0.0; m_in];

    for i in 0..n {
        let h = perturbation * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let f_p = (nlp.objective)(&xp);
        (nlp.eq.eval)(&xp, &mut eq_p);
        (nlp.ineq.eval)(&xp, &mut in_p);
        xp[i] = x[i] - h;
        let f_m = (nlp.objective)(&xp);
        (nlp.eq.eval)(&xp, &mut eq_m);
        (nlp.ineq.eval)(&xp, &mut in_m);
        xp[i] = x[i];

        let g_fd = (f_p - f_m) / (2.0 * h);
        record(
            rel_err(grad[i], g_fd),
            DerivLocation::Gradient { var: i },
            grad[i],
            g_fd,
            &mut report,
        );

        for r in 0..m_eq {
            eq_fd[r] = (eq_p[r] - eq_m[r]) / (2.0 * h);
        }
        for r in 0..m_in {
            in_fd[r] = (in_p[r] - in_m[r]) / (2.0 * h);
        }
        // Pattern entries first, then verify the remainder is numerically zero.
        for &(r, v) in &eq_cols[i] {
            record(
                rel_err(v, eq_fd[r]),
                DerivLocation::EqJacobian { row: r, var: i },
                v,
                eq_fd[r],
                &mut report,
            );
            eq_fd[r] = v; // mark as handled
        }
        for (r, &fd) in eq_fd.iter().enumerate() {
            if eq_cols[i].iter().any(|&(rr, _)| rr == r) {
                continue;
            }
            record(
                rel_err(0.0, fd),
                DerivLocation::EqJacobian { row: r, var: i },
                0.0,
                fd,
                &mut report,
            );
        }
        for &(r, v) in &in_cols[i] {
            record(
                rel_err(v, in_fd[r]),
                DerivLocation::IneqJacobian { row: r, var: i },
                v,
                in_fd[r],
                &mut report,
            );
            in_fd[r] = v;
        }
        for (r, &fd) in in_fd.iter().enumerate() {
            if in_cols[i].iter().any(|&(rr, _)| rr == r) {
                continue;
            }
            record(
                rel_err(0.0, fd),
                DerivLocation::IneqJacobian { row: r, var: i },
                0.0,
                fd,
                &mut report,
            );
        }
    }
    report
}
