//! Index bookkeeping for the transcribed NLP.
//!
//! Decision vector, interval-major:
//!
//! ```text
//! [ eta_0 nu_0 | X_01 .. X_0d | f_0 alpha_0 | eta_1 nu_1 | ... | eta_N nu_N ]
//! ```
//!
//! where each state slot is 6 wide, controls are per interval, and the final
//! boundary state closes the horizon. This ordering keeps every equality row
//! local to one interval (plus the next boundary state), which is what makes
//! the solver's KKT systems banded.

pub const STATE_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionLayout {
    pub n_intervals: usize,
    pub degree: usize,
    pub n_thrusters: usize,
    pub n_azimuth: usize,
}

impl DecisionLayout {
    pub fn n_controls(&self) -> usize {
        self.n_thrusters + self.n_azimuth
    }

    /// Width of one interval block.
    fn period(&self) -> usize {
        STATE_DIM * (1 + self.degree) + self.n_controls()
    }

    pub fn dim(&self) -> usize {
        self.n_intervals * self.period() + STATE_DIM
    }

    /// Offset of boundary state k, for k in 0..=N.
    pub fn boundary(&self, k: usize) -> usize {
        debug_assert!(k <= self.n_intervals);
        k * self.period()
    }

    /// Offset of collocation state j (1-based) of interval k.
    pub fn colloc(&self, k: usize, j: usize) -> usize {
        debug_assert!(k < self.n_intervals);
        debug_assert!(j >= 1 && j <= self.degree);
        self.boundary(k) + STATE_DIM * j
    }

    /// Offset of the state at basis point m of interval k, where m = 0 is
    /// the boundary state and m = 1..=d are collocation states.
    pub fn basis_state(&self, k: usize, m: usize) -> usize {
        if m == 0 {
            self.boundary(k)
        } else {
            self.colloc(k, m)
        }
    }

    /// Offset of the per-thruster forces of interval k.
    pub fn controls_f(&self, k: usize) -> usize {
        debug_assert!(k < self.n_intervals);
        self.boundary(k) + STATE_DIM * (1 + self.degree)
    }

    /// Offset of the azimuth angles of interval k.
    pub fn controls_alpha(&self, k: usize) -> usize {
        self.controls_f(k) + self.n_thrusters
    }

    /// All state-node offsets in temporal order: boundary 0, then each
    /// interval's collocation states followed by the next boundary state.
    pub fn state_nodes(&self) -> Vec<StateNode> {
        let mut nodes = Vec::with_capacity(1 + self.n_intervals * (self.degree + 1));
        nodes.push(StateNode {
            offset: self.boundary(0),
            time_index: NodeTime::Boundary(0),
        });
        for k in 0..self.n_intervals {
            for j in 1..=self.degree {
                nodes.push(StateNode {
                    offset: self.colloc(k, j),
                    time_index: NodeTime::Collocation(k, j),
                });
            }
            nodes.push(StateNode {
                offset: self.boundary(k + 1),
                time_index: NodeTime::Boundary(k + 1),
            });
        }
        nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTime {
    Boundary(usize),
    Collocation(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateNode {
    pub offset: usize,
    pub time_index: NodeTime,
}

/// Row bookkeeping of the transcribed constraints.
///
/// Equalities: 6 initial-condition rows, then per interval d*6 defect rows
/// followed by 6 continuity rows. Inequalities: spatial containment rows per
/// state node (edges x safety vertices), then two slew rows per azimuth and
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintLayout {
    pub n_intervals: usize,
    pub degree: usize,
    pub n_azimuth: usize,
    /// Half-space rows of the operating region (0 when unconstrained).
    pub n_region_rows: usize,
    /// Vertices of the safety polygon.
    pub n_safety_vertices: usize,
}

impl ConstraintLayout {
    pub fn n_eq(&self) -> usize {
        STATE_DIM + self.n_intervals * (STATE_DIM * self.degree + STATE_DIM)
    }

    pub fn init_rows(&self) -> std::ops::Range<usize> {
        0..STATE_DIM
    }

    /// Defect rows of collocation point j (1-based) in interval k.
    pub fn defect_rows(&self, k: usize, j: usize) -> std::ops::Range<usize> {
        let base = STATE_DIM + k * (STATE_DIM * self.degree + STATE_DIM) + (j - 1) * STATE_DIM;
        base..base + STATE_DIM
    }

    pub fn continuity_rows(&self, k: usize) -> std::ops::Range<usize> {
        let base = STATE_DIM + k * (STATE_DIM * self.degree + STATE_DIM) + self.degree * STATE_DIM;
        base..base + STATE_DIM
    }

    /// Containment rows per state node.
    pub fn rows_per_node(&self) -> usize {
        self.n_region_rows * self.n_safety_vertices
    }

    pub fn n_state_nodes(&self) -> usize {
        1 + self.n_intervals * (self.degree + 1)
    }

    /// State nodes carrying containment rows. The initial boundary state is
    /// excluded: it is pinned by the initial-condition equalities, so rows
    /// on it are either redundant or (when the measured state grazes the
    /// boundary) degenerate.
    pub fn n_constrained_nodes(&self) -> usize {
        self.n_state_nodes() - 1
    }

    pub fn n_ineq(&self) -> usize {
        self.n_constrained_nodes() * self.rows_per_node() + 2 * self.n_azimuth * self.n_intervals
    }

    /// Containment rows of constrained node `node` (temporal state node
    /// `node + 1`).
    pub fn spatial_rows(&self, node: usize) -> std::ops::Range<usize> {
        let base = node * self.rows_per_node();
        base..base + self.rows_per_node()
    }

    /// The two slew rows of azimuth a in interval k (k = 0 anchors at the
    /// commanded angles of the previous period).
    pub fn slew_rows(&self, k: usize, a: usize) -> std::ops::Range<usize> {
        let base = self.n_constrained_nodes() * self.rows_per_node()
            + (k * self.n_azimuth + a) * 2;
        base..base + 2
    }
}
