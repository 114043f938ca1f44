//! Regression suite over analytic constrained problems: every problem must
//! converge to its reference solution with a certified KKT residual.

use sqp::{kkt_residual, problems, solve, SolveStatus, SolverSettings};

#[test]
fn reference_problems_converge_to_known_solutions() {
    let battery = problems::all();
    assert!(battery.len() >= 10);

    for p in battery {
        let result = solve(&p.nlp, &SolverSettings::default(), None);
        assert_eq!(
            result.status,
            SolveStatus::Converged,
            "{}: status {:?} after {} iterations (kkt {:.3e})",
            p.name,
            result.status,
            result.stats.iterations,
            result.stats.kkt_residual
        );

        let kkt = kkt_residual(
            &p.nlp,
            &result.x,
            &result.y_eq,
            &result.z_ineq,
            &result.z_bounds,
        );
        assert!(
            kkt.scaled <= 1e-6,
            "{}: kkt residual {:.3e}",
            p.name,
            kkt.scaled
        );

        for (i, (&got, &want)) in result.x.iter().zip(p.solution.iter()).enumerate() {
            assert!(
                (got - want).abs() <= 1e-6,
                "{}: x[{}] = {:.12}, reference {:.12}",
                p.name,
                i,
                got,
                want
            );
        }
        if let Some(f_ref) = p.objective {
            let f = (p.nlp.objective)(&result.x);
            assert!(
                (f - f_ref).abs() <= 1e-6 * (1.0 + f_ref.abs()),
                "{}: objective {:.12}, reference {:.12}",
                p.name,
                f,
                f_ref
            );
        }
    }
}

#[test]
fn converged_solves_satisfy_kkt_invariants() {
    for p in problems::all() {
        let result = solve(&p.nlp, &SolverSettings::default(), None);
        if !result.converged() {
            continue;
        }
        let kkt = kkt_residual(
            &p.nlp,
            &result.x,
            &result.y_eq,
            &result.z_ineq,
            &result.z_bounds,
        );
        assert!(kkt.eq_violation <= 1e-6, "{}", p.name);
        assert!(kkt.ineq_violation <= 1e-6, "{}", p.name);
        assert!(kkt.complementarity <= 1e-4, "{}", p.name);
        // Inequality and bound multipliers stay nonnegative.
        for &z in result.z_ineq.iter().chain(result.z_bounds.iter()) {
            assert!(z >= -1e-9, "{}: multiplier {}", p.name, z);
        }
    }
}
