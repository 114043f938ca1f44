//! Symmetric banded matrix storage and an unpivoted LDL^T factorization.
//!
//! KKT matrices of time-structured optimal-control problems are banded once
//! variables and equality multipliers are interleaved in temporal order. The
//! factorization below exploits that: cost is O(n * bw^2) instead of O(n^3).
//! With primal/dual regularization the KKT matrix is symmetric quasi-definite,
//! for which the unpivoted factorization exists for any symmetric ordering.

/// Lower-triangle column-major banded storage: entry `(j + k, j)` lives at
/// `data[j * (bw + 1) + k]` for `k` in `0..=bw`.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        j * (self.bw + 1) + (i - j)
    }

    /// Accumulate `v` at `(i, j)`; the pair is symmetrized internally.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(hi, lo);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            return 0.0;
        }
        self.data[self.idx(hi, lo)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FactorError {
    #[error("zero pivot encountered at index {0}")]
    ZeroPivot(usize),
}

/// LDL^T factor of a [`BandedSym`]; L is unit lower triangular within the
/// band and D is diagonal (stored on the diagonal slots).
#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    negative_pivots: usize,
}

impl BandedLdl {
    pub fn factorize(a: &BandedSym, pivot_floor: f64) -> Result<Self, FactorError> {
        let n = a.n;
        let bw = a.bw;
        let stride = bw + 1;
        let mut data = a.data.clone();
        let mut negative = 0usize;

        for j in 0..n {
            let kmin = j.saturating_sub(bw);
            let mut d = data[j * stride];
            for k in kmin..j {
                let l_jk = data[k * stride + (j - k)];
                let d_k = data[k * stride];
                d -= l_jk * l_jk * d_k;
            }
            if d.abs() <= pivot_floor {
                return Err(FactorError::ZeroPivot(j));
            }
            if d < 0.0 {
                negative += 1;
            }
            data[j * stride] = d;

            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let mut s = data[j * stride + (i - j)];
                let klo = kmin.max(i.saturating_sub(bw));
                for k in klo..j {
                    let l_ik = data[k * stride + (i - k)];
                    let l_jk = data[k * stride + (j - k)];
                    let d_k = data[k * stride];
                    s -= l_ik * l_jk * d_k;
                }
                data[j * stride + (i - j)] = s / d;
            }
        }

        Ok(Self {
            n,
            bw,
            data,
            negative_pivots: negative,
        })
    }

    /// Number of negative pivots in D (the negative inertia).
    pub fn negative_pivots(&self) -> usize {
        self.negative_pivots
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let stride = self.bw + 1;
        // L z = b
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                let imax = (j + self.bw).min(self.n - 1);
                for i in (j + 1)..=imax {
                    x[i] -= self.data[j * stride + (i - j)] * xj;
                }
            }
        }
        // D w = z
        for j in 0..self.n {
            x[j] /= self.data[j * stride];
        }
        // L^T x = w
        for j in (0..self.n).rev() {
            let mut s = x[j];
            let imax = (j + self.bw).min(self.n - 1);
            for i in (j + 1)..=imax {
                s -= self.data[j * stride + (i - j)] * x[i];
            }
            x[j] = s;
        }
    }
}
