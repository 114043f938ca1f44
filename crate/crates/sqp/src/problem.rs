//! Problem definition consumed by the solver.

/// Row-wise sparsity pattern of a constraint Jacobian.
///
/// Entry `rows[i]` lists the decision-variable indices that constraint `i`
/// depends on. Value arrays produced by the Jacobian evaluators are parallel
/// to these lists. Column indices within a row must be distinct; their order
/// is free but must match between pattern and values.
#[derive(Debug, Clone, Default)]
pub struct JacPattern {
    pub rows: Vec<Vec<usize>>,
}

impl JacPattern {
    pub fn empty() -> Self {
        Self { rows: Vec::new() }
    }

    /// Fully dense pattern: every row depends on every variable.
    pub fn dense(n_rows: usize, dim: usize) -> Self {
        Self {
            rows: vec![(0..dim).collect(); n_rows],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// Jacobian values laid out to match a [`JacPattern`].
#[derive(Debug, Clone, Default)]
pub struct JacValues {
    pub rows: Vec<Vec<f64>>,
}

impl JacValues {
    pub fn zeros_like(pattern: &JacPattern) -> Self {
        Self {
            rows: pattern.rows.iter().map(|r| vec![0.0; r.len()]).collect(),
        }
    }
}

pub type ValueFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type JacFn = Box<dyn Fn(&[f64], &mut JacValues) + Send + Sync>;

/// A block of constraints: sparsity pattern plus value/Jacobian evaluators.
///
/// Both evaluators must be deterministic pure functions of `x`.
pub struct ConstraintBlock {
    pub pattern: JacPattern,
    pub eval: ValueFn,
    pub jac: JacFn,
}

impl ConstraintBlock {
    pub fn empty() -> Self {
        Self {
            pattern: JacPattern::empty(),
            eval: Box::new(|_, _| {}),
            jac: Box::new(|_, _| {}),
        }
    }

    /// Dense helper for small problems: `eval` fills the constraint values,
    /// `jac` fills a row-major `n_rows x dim` slice.
    pub fn from_dense<E, J>(n_rows: usize, dim: usize, eval: E, jac: J) -> Self
    where
        E: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        J: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let pattern = JacPattern::dense(n_rows, dim);
        let jac_fn: JacFn = Box::new(move |x, out| {
            let mut flat = vec![0.0; n_rows * dim];
            jac(x, &mut flat);
            for i in 0..n_rows {
                out.rows[i].copy_from_slice(&flat[i * dim..(i + 1) * dim]);
            }
        });
        Self {
            pattern,
            eval: Box::new(eval),
            jac: jac_fn,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows()
    }
}

/// Symmetric Hessian model of the objective (or Lagrangian approximation)
/// with a fixed lower-triangular sparsity pattern.
pub struct HessianBlock {
    /// `(row, col)` with `row >= col`; duplicates are accumulated.
    pub pattern: Vec<(usize, usize)>,
    pub eval: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

/// A smooth NLP with explicit first derivatives.
///
/// Inequalities use the `c_in(x) >= 0` convention. Bounds may be infinite.
pub struct Nlp {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Vec<f64>,
    pub objective: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub gradient: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    pub eq: ConstraintBlock,
    pub ineq: ConstraintBlock,
    /// Optional structured Hessian model; when absent the solver falls back
    /// to damped BFGS.
    pub hessian: Option<HessianBlock>,
}

impl Nlp {
    /// Unconstrained, unbounded problem starting at the origin.
    pub fn new<F, G>(dim: usize, objective: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            x0: vec![0.0; dim],
            objective: Box::new(objective),
            gradient: Box::new(gradient),
            eq: ConstraintBlock::empty(),
            ineq: ConstraintBlock::empty(),
            hessian: None,
        }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.dim);
        self.x0 = x0;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), self.dim);
        assert_eq!(upper.len(), self.dim);
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_eq(mut self, eq: ConstraintBlock) -> Self {
        self.eq = eq;
        self
    }

    pub fn with_ineq(mut self, ineq: ConstraintBlock) -> Self {
        self.ineq = ineq;
        self
    }

    pub fn with_hessian(mut self, hessian: HessianBlock) -> Self {
        self.hessian = Some(hessian);
        self
    }

    pub fn n_eq(&self) -> usize {
        self.eq.n_rows()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq.n_rows()
    }
}
