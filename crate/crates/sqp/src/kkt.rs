//! Ordering of the condensed KKT system.
//!
//! The condensed Newton system of the QP subproblem couples the primal step
//! with the equality multipliers:
//!
//! ```text
//!     [ H + J_in^T W J_in + delta I    J_eq^T ] [ dx      ]   [ r1 ]
//!     [ J_eq                          -eps I  ] [ -dy_eq  ] = [ r2 ]
//! ```
//!
//! Variables and equality rows are interleaved by their support centers so
//! that temporally local problems produce a small bandwidth. Unstructured
//! problems fall out as (near-)full bandwidth and go through the same code.

use crate::problem::JacPattern;

#[derive(Debug, Clone)]
pub struct KktOrdering {
    pub n_vars: usize,
    pub m_eq: usize,
    /// Unknown slot of each decision variable.
    pub var_pos: Vec<usize>,
    /// Unknown slot of each equality multiplier.
    pub eq_pos: Vec<usize>,
    pub bandwidth: usize,
}

impl KktOrdering {
    pub fn total(&self) -> usize {
        self.n_vars + self.m_eq
    }

    /// Build the interleaved ordering and compute the resulting bandwidth.
    ///
    /// `ineq_supports` must yield the variable support of every inequality
    /// row that will be condensed into the (1,1) block, including bound rows.
    pub fn build<'a>(
        n_vars: usize,
        h_pattern: &[(usize, usize)],
        eq_pattern: &JacPattern,
        ineq_supports: impl Iterator<Item = &'a [usize]>,
    ) -> Self {
        let m_eq = eq_pattern.n_rows();

        // Sort key: variables at 2*i, equality rows at lo+hi+1 of their
        // support so each row lands next to the variables it touches.
        let mut items: Vec<(usize, u8, usize)> = Vec::with_capacity(n_vars + m_eq);
        for i in 0..n_vars {
            items.push((2 * i, 0, i));
        }
        for (r, support) in eq_pattern.rows.iter().enumerate() {
            let key = match (support.iter().min(), support.iter().max()) {
                (Some(lo), Some(hi)) => lo + hi + 1,
                _ => 0,
            };
            items.push((key, 1, r));
        }
        items.sort_by_key(|&(key, class, idx)| (key, class, idx));

        let mut var_pos = vec![0usize; n_vars];
        let mut eq_pos = vec![0usize; m_eq];
        for (slot, &(_, class, idx)) in items.iter().enumerate() {
            if class == 0 {
                var_pos[idx] = slot;
            } else {
                eq_pos[idx] = slot;
            }
        }

        let mut bw = 0usize;
        let span = |a: usize, b: usize| a.max(b) - a.min(b);
        for &(i, j) in h_pattern {
            bw = bw.max(span(var_pos[i], var_pos[j]));
        }
        for (r, support) in eq_pattern.rows.iter().enumerate() {
            for &i in support {
                bw = bw.max(span(eq_pos[r], var_pos[i]));
            }
        }
        for support in ineq_supports {
            let mut lo = usize::MAX;
            let mut hi = 0usize;
            for &i in support {
                lo = lo.min(var_pos[i]);
                hi = hi.max(var_pos[i]);
            }
            if lo != usize::MAX {
                bw = bw.max(hi - lo);
            }
        }
        Self {
            n_vars,
            m_eq,
            var_pos,
            eq_pos,
            bandwidth: bw,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_structure_gets_small_bandwidth() {
        // 10 "stages" of 3 variables; one equality row couples each stage to
        // the next stage's first variable -- a miniature shooting structure.
        let n = 30;
        let mut eq_rows = Vec::new();
        for k in 0..9usize {
            eq_rows.push(vec![3 * k, 3 * k + 1, 3 * k + 2, 3 * (k + 1)]);
        }
        let eq = JacPattern { rows: eq_rows };
        let h: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        let ord = KktOrdering::build(n, &h, &eq, std::iter::empty());
        assert!(
            ord.bandwidth <= 8,
            "expected local bandwidth, got {}",
            ord.bandwidth
        );

        // All slots distinct and covering 0..total.
        let mut seen = vec![false; ord.total()];
        for &p in ord.var_pos.iter().chain(ord.eq_pos.iter()) {
            assert!(!seen[p]);
            seen[p] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn dense_rows_force_full_bandwidth() {
        let eq = JacPattern {
            rows: vec![(0..6).collect()],
        };
        let ord = KktOrdering::build(6, &[], &eq, std::iter::empty());
        // The multiplier slot lands mid-row, so the span covers at least half
        // the variables on each side.
        assert!(ord.bandwidth >= 4 && ord.bandwidth <= 6, "{}", ord.bandwidth);
    }
}
