//! Small battery of classic constrained test problems with known solutions.
//!
//! Each constructor returns the problem plus its reference minimizer. The
//! collection spans equality, inequality, bound-active and
//! degenerate-multiplier cases and backs the solver regression suite.

use crate::problem::{ConstraintBlock, Nlp};

pub struct ReferenceProblem {
    pub name: &'static str,
    pub nlp: Nlp,
    pub solution: Vec<f64>,
    /// Reference objective value when the minimizer alone is not a sharp test.
    pub objective: Option<f64>,
}

/// min x^2 s.t. x >= 1; active bound, multiplier 2.
pub fn bound_quadratic() -> ReferenceProblem {
    let nlp = Nlp::new(
        1,
        |x: &[f64]| x[0] * x[0],
        |x: &[f64], g: &mut [f64]| g[0] = 2.0 * x[0],
    )
    .with_bounds(vec![1.0], vec![f64::INFINITY])
    .with_x0(vec![5.0]);
    ReferenceProblem {
        name: "bound-quadratic",
        nlp,
        solution: vec![1.0],
        objective: Some(1.0),
    }
}

/// min x^2 s.t. x >= 0; the bound is active with a zero multiplier.
pub fn degenerate_bound() -> ReferenceProblem {
    let nlp = Nlp::new(
        1,
        |x: &[f64]| x[0] * x[0],
        |x: &[f64], g: &mut [f64]| g[0] = 2.0 * x[0],
    )
    .with_bounds(vec![0.0], vec![f64::INFINITY])
    .with_x0(vec![2.0]);
    ReferenceProblem {
        name: "degenerate-bound",
        nlp,
        solution: vec![0.0],
        objective: Some(0.0),
    }
}

/// Unconstrained Rosenbrock valley.
pub fn rosenbrock() -> ReferenceProblem {
    let nlp = Nlp::new(
        2,
        |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
        |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
        },
    )
    .with_x0(vec![-1.2, 1.0]);
    ReferenceProblem {
        name: "rosenbrock",
        nlp,
        solution: vec![1.0, 1.0],
        objective: Some(0.0),
    }
}

/// min x + y s.t. x^2 + y^2 = 1.
pub fn linear_on_circle() -> ReferenceProblem {
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
    .with_x0(vec![1.0, 0.0]);
    let r = 0.5f64.sqrt();
    ReferenceProblem {
        name: "linear-on-circle",
        nlp,
        solution: vec![-r, -r],
        objective: Some(-2.0 * r),
    }
}

/// Hock-Schittkowski 6: min (1 - x1)^2 s.t. 10 (x2 - x1^2) = 0.
pub fn hs6() -> ReferenceProblem {
    let eq = ConstraintBlock::from_dense(
        1,
        2,
        |x: &[f64], out: &mut [f64]| out[0] = 10.0 * (x[1] - x[0] * x[0]),
        |x: &[f64], jac: &mut [f64]| {
            jac[0] = -20.0 * x[0];
            jac[1] = 10.0;
        },
    );
    let nlp = Nlp::new(
        2,
        |x: &[f64]| (1.0 - x[0]).powi(2),
        |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (1.0 - x[0]);
            g[1] = 0.0;
        },
    )
    .with_eq(eq)
    .with_x0(vec![-1.2, 1.0]);
    ReferenceProblem {
        name: "hs6",
        nlp,
        solution: vec![1.0, 1.0],
        objective: Some(0.0),
    }
}

/// Hock-Schittkowski 7: min ln(1 + x1^2) - x2 s.t. (1 + x1^2)^2 + x2^2 = 4.
pub fn hs7() -> ReferenceProblem {
    let eq = ConstraintBlock::from_dense(
        1,
        2,
        |x: &[f64], out: &mut [f64]| {
            let w = 1.0 + x[0] * x[0];
            out[0] = w * w + x[1] * x[1] - 4.0;
        },
        |x: &[f64], jac: &mut [f64]| {
            let w = 1.0 + x[0] * x[0];
            jac[0] = 4.0 * w * x[0];
            jac[1] = 2.0 * x[1];
        },
    );
    let nlp = Nlp::new(
        2,
        |x: &[f64]| (1.0 + x[0] * x[0]).ln() - x[1],
        |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0] / (1.0 + x[0] * x[0]);
            g[1] = -1.0;
        },
    )
    .with_eq(eq)
    .with_x0(vec![2.0, 2.0]);
    ReferenceProblem {
        name: "hs7",
        nlp,
        solution: vec![0.0, 3.0f64.sqrt()],
        objective: Some(-(3.0f64.sqrt())),
    }
}

/// Hock-Schittkowski 21: min 0.01 x1^2 + x2^2 - 100
/// s.t. 10 x1 - x2 >= 10, 2 <= x1 <= 50, -50 <= x2 <= 50.
pub fn hs21() -> ReferenceProblem {
    let ineq = ConstraintBlock::from_dense(
        1,
        2,
        |x: &[f64], out: &mut [f64]| out[0] = 10.0 * x[0] - x[1] - 10.0,
        |_x: &[f64], jac: &mut [f64]| {
            jac[0] = 10.0;
            jac[1] = -1.0;
        },
    );
    let nlp = Nlp::new(
        2,
        |x: &[f64]| 0.01 * x[0] * x[0] + x[1] * x[1] - 100.0,
        |x: &[f64], g: &mut [f64]| {
            g[0] = 0.02 * x[0];
            g[1] = 2.0 * x[1];
        },
    )
    .with_ineq(ineq)
    .with_bounds(vec![2.0, -50.0], vec![50.0, 50.0])
    .with_x0(vec![-1.0, -1.0]);
    ReferenceProblem {
        name: "hs21",
        nlp,
        solution: vec![2.0, 0.0],
        objective: Some(-99.96),
    }
}

/// Hock-Schittkowski 35 (Beale): convex QP with one linear inequality and
/// nonnegativity bounds.
pub fn hs35() -> ReferenceProblem {
    let ineq = ConstraintBlock::from_dense(
        1,
        3,
        |x: &[f64], out: &mut [f64]| out[0] = 3.0 - x[0] - x[1] - 2.0 * x[2],
        |_x: &[f64], jac: &mut [f64]| {
            jac[0] = -1.0;
            jac[1] = -1.0;
            jac[2] = -2.0;
        },
    );
    let nlp = Nlp::new(
        3,
        |x: &[f64]| {
            9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2]
                + 2.0 * x[0] * x[0]
                + 2.0 * x[1] * x[1]
                + x[2] * x[2]
                + 2.0 * x[0] * x[1]
                + 2.0 * x[0] * x[2]
        },
        |x: &[f64], g: &mut [f64]| {
            g[0] = -8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2];
            g[1] = -6.0 + 4.0 * x[1] + 2.0 * x[0];
            g[2] = -4.0 + 2.0 * x[2] + 2.0 * x[0];
        },
    )
    .with_ineq(ineq)
    .with_bounds(vec![0.0; 3], vec![f64::INFINITY; 3])
    .with_x0(vec![0.5, 0.5, 0.5]);
    ReferenceProblem {
        name: "hs35",
        nlp,
        solution: vec![4.0 / 3.0, 7.0 / 9.0, 4.0 / 9.0],
        objective: Some(1.0 / 9.0),
    }
}

/// Textbook QP: min (x1-1)^2 + (x2-2.5)^2 over a pentagon.
pub fn pentagon_qp() -> ReferenceProblem {
    let ineq = ConstraintBlock::from_dense(
        3,
        2,
        |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] - 2.0 * x[1] + 2.0;
            out[1] = -x[0] - 2.0 * x[1] + 6.0;
            out[2] = -x[0] + 2.0 * x[1] + 2.0;
        },
        |_x: &[f64], jac: &mut [f64]| {
            jac.copy_from_slice(&[1.0, -2.0, -1.0, -2.0, -1.0, 2.0]);
        },
    );
    let nlp = Nlp::new(
        2,
        |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] - 2.5).powi(2),
        |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 1.0);
            g[1] = 2.0 * (x[1] - 2.5);
        },
    )
    .with_ineq(ineq)
    .with_bounds(vec![0.0, 0.0], vec![f64::INFINITY; 2])
    .with_x0(vec![2.0, 0.0]);
    ReferenceProblem {
        name: "pentagon-qp",
        nlp,
        solution: vec![1.4, 1.7],
        objective: Some(0.8),
    }
}

/// min -x1 x2 x3 s.t. x1 + x2 + x3 = 3, 0 <= x <= 2.
pub fn product_on_simplex() -> ReferenceProblem {
    let eq = ConstraintBlock::from_dense(
        1,
        3,
        |x: &[f64], out: &mut [f64]| out[0] = x[0] + x[1] + x[2] - 3.0,
        |_x: &[f64], jac: &mut [f64]| jac.copy_from_slice(&[1.0, 1.0, 1.0]),
    );
    let nlp = Nlp::new(
        3,
        |x: &[f64]| -x[0] * x[1] * x[2],
        |x: &[f64], g: &mut [f64]| {
            g[0] = -x[1] * x[2];
            g[1] = -x[0] * x[2];
            g[2] = -x[0] * x[1];
        },
    )
    .with_eq(eq)
    .with_bounds(vec![0.0; 3], vec![2.0; 3])
    .with_x0(vec![0.2, 0.8, 2.0]);
    ReferenceProblem {
        name: "product-on-simplex",
        nlp,
        solution: vec![1.0, 1.0, 1.0],
        objective: Some(-1.0),
    }
}

/// Entropy minimization on the probability simplex: uniform optimum.
pub fn entropy_simplex() -> ReferenceProblem {
    let eq = ConstraintBlock::from_dense(
        1,
        3,
        |x: &[f64], out: &mut [f64]| out[0] = x[0] + x[1] + x[2] - 1.0,
        |_x: &[f64], jac: &mut [f64]| jac.copy_from_slice(&[1.0, 1.0, 1.0]),
    );
    let nlp = Nlp::new(
        3,
        |x: &[f64]| x.iter().map(|&v| v * v.ln()).sum(),
        |x: &[f64], g: &mut [f64]| {
            for (gi, &v) in g.iter_mut().zip(x.iter()) {
                *gi = v.ln() + 1.0;
            }
        },
    )
    .with_eq(eq)
    .with_bounds(vec![1e-6; 3], vec![f64::INFINITY; 3])
    .with_x0(vec![0.6, 0.3, 0.1]);
    ReferenceProblem {
        name: "entropy-simplex",
        nlp,
        solution: vec![1.0 / 3.0; 3],
        objective: Some(-(3f64.ln())),
    }
}

/// Minimum-norm point on the intersection of two hyperplanes.
pub fn two_plane_projection() -> ReferenceProblem {
    let eq = ConstraintBlock::from_dense(
        2,
        3,
        |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] + x[1] + x[2] - 3.0;
            out[1] = x[0] - x[2];
        },
        |_x: &[f64], jac: &mut [f64]| {
            jac.copy_from_slice(&[1.0, 1.0, 1.0, 1.0, 0.0, -1.0]);
        },
    );
    let nlp = Nlp::new(
        3,
        |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64], g: &mut [f64]| g.copy_from_slice(x),
    )
    .with_eq(eq)
    .with_x0(vec![5.0, -2.0, 0.4]);
    ReferenceProblem {
        name: "two-plane-projection",
        nlp,
        solution: vec![1.0, 1.0, 1.0],
        objective: Some(1.5),
    }
}

/// All problems, in a stable order.
pub fn all() -> Vec<ReferenceProblem> {
    vec![
        bound_quadratic(),
        degenerate_bound(),
        rosenbrock(),
        linear_on_circle(),
        hs6(),
        hs7(),
        hs21(),
        hs35(),
        pentagon_qp(),
        product_on_simplex(),
        entropy_simplex(),
        two_plane_projection(),
    ]
}

/// Reference QP solver by brute-force active-set enumeration: every subset
/// of the inequality rows `A_in x >= b_in` is tried as the active set, the
/// equality-constrained KKT system is solved densely, and the feasible
/// candidate with nonnegative multipliers wins. Exponential in the row
/// count; meant as a test oracle for small problems.
pub fn brute_force_qp(
    h: &nalgebra::DMatrix<f64>,
    g: &[f64],
    a_eq: &nalgebra::DMatrix<f64>,
    b_eq: &[f64],
    a_in: &nalgebra::DMatrix<f64>,
    b_in: &[f64],
) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let n = g.len();
    let m_in = b_in.len();
    let m_eq = b_eq.len();
    assert!(m_in <= 20, "enumeration over 2^{m_in} active sets");
    let mut best: Option<(f64, Vec<f64>)> = None;

    for mask in 0u32..(1 << m_in) {
        let active: Vec<usize> = (0..m_in).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        let dim = n + k + m_eq;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = h[(i, j)];
            }
            rhs[i] = -g[i];
        }
        for (s, &row) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + s, j)] = a_in[(row, j)];
                kkt[(j, n + s)] = -a_in[(row, j)];
            }
            rhs[n + s] = b_in[row];
        }
        for r in 0..m_eq {
            for j in 0..n {
                kkt[(n + k + r, j)] = a_eq[(r, j)];
                kkt[(j, n + k + r)] = -a_eq[(r, j)];
            }
            rhs[n + k + r] = b_eq[r];
        }

        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, n).into_owned();
        if (0..k).any(|s| sol[n + s] < -1e-9) {
            continue;
        }
        let mut feasible = true;
        for r in 0..m_in {
            if (a_in.row(r) * &x)[0] < b_in[r] - 1e-9 {
                feasible = false;
                break;
            }
        }
        for r in 0..m_eq {
            if ((a_eq.row(r) * &x)[0] - b_eq[r]).abs() > 1e-8 {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let f = 0.5 * (&x.transpose() * h * &x)[0]
            + x.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>();
        match &best {
            Some((fb, _)) if *fb <= f + 1e-12 => {}
            _ => best = Some((f, x.iter().copied().collect())),
        }
    }
    best.map(|(_, x)| x)
}
