//! Collocation coefficients on one shooting interval.
//!
//! State trajectories are degree-d polynomials through the interval start
//! (tau = 0) and d Gauss-Legendre collocation points in (0, 1). The grid
//! carries the Lagrange differentiation matrix at the collocation points,
//! the interpolation weights at tau = 1 (for shooting-gap continuity) and
//! quadrature weights for the running cost.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("unsupported collocation degree {0} (expected 1..=5)")]
    UnsupportedDegree(usize),
    #[error("interval length must be positive, got {0}")]
    BadInterval(f64),
}

#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub degree: usize,
    /// Interval length h, seconds.
    pub interval: f64,
    /// Collocation points in (0, 1), ascending.
    pub tau: Vec<f64>,
    /// `diff[m][j]`: derivative of the m-th Lagrange basis polynomial
    /// (m in 0..=d over the points {0} U tau) evaluated at tau[j].
    pub diff: Vec<Vec<f64>>,
    /// Quadrature weights over all d+1 basis points; integrates the
    /// interpolant over [0, 1] (the left-endpoint weight is zero for
    /// Gauss-Legendre interior points).
    pub quad: Vec<f64>,
    /// Interpolation weights at tau = 1.
    pub end: Vec<f64>,
}

/// Roots of the shifted Legendre polynomial of the given degree on (0, 1).
fn shifted_legendre_roots(degree: usize) -> Option<Vec<f64>> {
    let r = match degree {
        1 => vec![0.5],
        2 => {
            let a = 0.5 / 3.0f64.sqrt();
            vec![0.5 - a, 0.5 + a]
        }
        3 => {
            let a = 0.5 * (3.0f64 / 5.0).sqrt();
            vec![0.5 - a, 0.5, 0.5 + a]
        }
        4 => {
            let t1 = (3.0 - 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0;
            let t2 = (3.0 + 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0;
            let (a, b) = (0.5 * t1.sqrt(), 0.5 * t2.sqrt());
            vec![0.5 - b, 0.5 - a, 0.5 + a, 0.5 + b]
        }
        5 => {
            let t1 = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 6.0;
            let t2 = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 6.0;
            vec![0.5 - t2, 0.5 - t1, 0.5, 0.5 + t1, 0.5 + t2]
        }
        _ => return None,
    };
    Some(r)
}

/// Multiply polynomial coefficients (ascending powers) by (x - root).
fn poly_mul_linear(coeffs: &[f64], root: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() + 1];
    for (k, &c) in coeffs.iter().enumerate() {
        out[k] -= c * root;
        out[k + 1] += c;
    }
    out
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

fn poly_integral_01(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c / (k as f64 + 1.0))
        .sum()
}

/// Build the collocation grid for a degree-d Legendre scheme on intervals of
/// `interval` seconds.
pub fn legendre_grid(degree: usize, interval: f64) -> Result<CollocationGrid, GridError> {
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(GridError::BadInterval(interval));
    }
    let tau = shifted_legendre_roots(degree).ok_or(GridError::UnsupportedDegree(degree))?;

    let mut points = Vec::with_capacity(degree + 1);
    points.push(0.0);
    points.extend_from_slice(&tau);

    let mut diff = vec![vec![0.0; degree]; degree + 1];
    let mut quad = vec![0.0; degree + 1];
    let mut end = vec![0.0; degree + 1];
    for m in 0..=degree {
        // Lagrange basis polynomial m in monomial form.
        let mut coeffs = vec![1.0];
        for (k, &p) in points.iter().enumerate() {
            if k != m {
                coeffs = poly_mul_linear(&coeffs, p);
                let scale = points[m] - p;
                for c in coeffs.iter_mut() {
                    *c /= scale;
                }
            }
        }
        end[m] = poly_eval(&coeffs, 1.0);
        quad[m] = poly_integral_01(&coeffs);
        let dcoeffs = poly_derivative(&coeffs);
        for (j, &t) in tau.iter().enumerate() {
            diff[m][j] = poly_eval(&dcoeffs, t);
        }
    }

    Ok(CollocationGrid {
        degree,
        interval,
        tau,
        diff,
        quad,
        end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Newton iteration on the shifted Legendre polynomial, the independent
    /// root oracle for the hardcoded tables.
    fn legendre_root_oracle(degree: usize, guess: f64) -> f64 {
        // P_n on [0,1] via the recurrence on [-1,1] with x -> 2t - 1.
        let eval = |n: usize, t: f64| -> (f64, f64) {
            let x = 2.0 * t - 1.0;
            let (mut p0, mut p1) = (1.0, x);
            let (mut d0, mut d1) = (0.0, 1.0);
            if n == 0 {
                return (p0, 0.0);
            }
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                let d2 = ((2.0 * kf - 1.0) * (p1 + x * d1) - (kf - 1.0) * d0) / kf;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            (p1, 2.0 * d1) // chain rule for the shift
        };
        let mut t = guess;
        for _ in 0..60 {
            let (p, dp) = eval(degree, t);
            if dp.abs() < 1e-300 {
                break;
            }
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t
    }

    #[test]
    fn low_degree_points_match_root_finding() {
        let g2 = legendre_grid(2, 10.0).unwrap();
        assert_relative_eq!(g2.tau[0], 0.21132486540518713, epsilon = 1e-14);
        assert_relative_eq!(g2.tau[1], 0.7886751345948129, epsilon = 1e-14);
        for (i, &t) in g2.tau.iter().enumerate() {
            let refined = legendre_root_oracle(2, t + 1e-3);
            assert_relative_eq!(t, refined, epsilon = 1e-12, max_relative = 1e-12);
            let _ = i;
        }

        let g3 = legendre_grid(3, 10.0).unwrap();
        assert_relative_eq!(g3.tau[0], 0.1127016653792583, epsilon = 1e-14);
        assert_relative_eq!(g3.tau[1], 0.5, epsilon = 1e-14);
        assert_relative_eq!(g3.tau[2], 0.8872983346207417, epsilon = 1e-14);
        for &t in &g3.tau {
            let refined = legendre_root_oracle(3, t + 1e-3);
            assert_relative_eq!(t, refined, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn all_supported_degrees_have_valid_roots() {
        for d in 1..=5 {
            let g = legendre_grid(d, 1.0).unwrap();
            assert_eq!(g.tau.len(), d);
            for &t in &g.tau {
                assert!(t > 0.0 && t < 1.0);
                let refined = legendre_root_oracle(d, t);
                assert_relative_eq!(t, refined, epsilon = 1e-12);
            }
            for w in g.tau.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        assert!(legendre_grid(0, 1.0).is_err());
        assert!(legendre_grid(6, 1.0).is_err());
        assert!(legendre_grid(3, 0.0).is_err());
    }

    #[test]
    fn quadrature_integrates_constants_to_h() {
        for d in 1..=5 {
            let g = legendre_grid(d, 10.0).unwrap();
            let total: f64 = g.quad.iter().sum();
            assert_relative_eq!(g.interval * total, 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_is_exact_for_low_degree_monomials() {
        for d in 1..=5usize {
            let g = legendre_grid(d, 1.0).unwrap();
            // Interpolatory exactness up to degree d; Gauss points actually
            // buy exactness up to 2d - 1.
            for p in 0..=(2 * d - 1) {
                let mut approx_int = g.quad[0] * 0.0f64.powi(p as i32);
                if p == 0 {
                    approx_int = g.quad[0];
                }
                for (j, &t) in g.tau.iter().enumerate() {
                    approx_int += g.quad[j + 1] * t.powi(p as i32);
                }
                let exact = 1.0 / (p as f64 + 1.0);
                assert_relative_eq!(approx_int, exact, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials_exactly() {
        for d in 1..=5usize {
            let g = legendre_grid(d, 1.0).unwrap();
            // Random-ish degree-d polynomial.
            let coeffs: Vec<f64> = (0..=d).map(|k| ((k * 7 + d) as f64 * 0.913).sin()).collect();
            let dcoeffs = poly_derivative(&coeffs);

            let mut samples = vec![poly_eval(&coeffs, 0.0)];
            for &t in &g.tau {
                samples.push(poly_eval(&coeffs, t));
            }

            let end_value: f64 = g.end.iter().zip(&samples).map(|(w, s)| w * s).sum();
            assert_relative_eq!(end_value, poly_eval(&coeffs, 1.0), epsilon = 1e-11);

            for (j, &t) in g.tau.iter().enumerate() {
                let deriv: f64 = (0..=d).map(|m| g.diff[m][j] * samples[m]).sum();
                assert_relative_eq!(deriv, poly_eval(&dcoeffs, t), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn left_endpoint_quadrature_weight_vanishes_for_gauss_points() {
        for d in 1..=5 {
            let g = legendre_grid(d, 1.0).unwrap();
            assert_relative_eq!(g.quad[0], 0.0, epsilon = 1e-12);
        }
    }
}
