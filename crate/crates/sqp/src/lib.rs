//! Sequential quadratic programming for smooth nonlinear programs.
//!
//! The solver handles problems of the form
//!
//! ```text
//!     minimize    f(x)
//!     subject to  c_eq(x)  = 0
//!                 c_in(x) >= 0
//!                 lower <= x <= upper
//! ```
//!
//! with user-supplied first derivatives. Each SQP iteration builds a convex
//! QP from a regularized Hessian model and the constraint linearizations,
//! solves it with a primal-dual interior-point method, and globalizes with a
//! backtracking line search on an l1 merit function. Constraint Jacobians are
//! given row-wise with explicit sparsity so that the KKT systems of
//! time-structured problems stay banded; unstructured dense problems work
//! through the same path with full bandwidth.

pub mod banded;
pub mod deriv_check;
pub mod kkt;
pub mod problem;
pub mod problems;
pub mod qp;
pub mod solver;

pub use deriv_check::{derivative_check, DerivLocation, DerivReport};
pub use problem::{ConstraintBlock, HessianBlock, JacPattern, JacValues, Nlp};
pub use qp::{QpOutcome, QpSettings, QpStatus};
pub use solver::{
    kkt_residual, solve, HessianMode, KktBreakdown, SolveResult, SolveStats, SolveStatus,
    SolverSettings, WarmStart,
};
