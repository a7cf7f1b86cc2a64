//! End-to-end solver behaviour: manufactured recovery, sweep
//! bookkeeping, convergence accounting.

use hlab_core::grid::{apply_helmholtz_operator, build_grid, WaveField};
use hlab_core::identities::manufactured_pair;
use hlab_core::model::{parse_scenario, PrecondKind, Scenario};
use hlab_core::solver::{
    epsilon_sweep, epsilon_sweep_values, gmres_solve, solve_fixed_epsilon_with,
    solve_with_source,
};
use hlab_core::C64;

fn free_like(epsilon: f64) -> Scenario {
    parse_scenario(&format!(
        "[scenario]\n\
         dimension = 2\n\
         lambda = 1\n\
         epsilon = {epsilon}\n\
         [fields]\n\
         n = \"1\"\n\
         f_re = \"0.15915494309189535 * exp(-r^2/2)\"\n\
         [solver]\n\
         collar_strength = 1.25\n"
    ))
    .unwrap()
}

fn rel_error(u: &WaveField, v: &WaveField) -> f64 {
    let num: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    num / v.norm_l2()
}

#[test]
fn manufactured_solution_recovered_within_ten_times_tolerance() {
    let sc = free_like(0.05);
    let grid = build_grid(2, 8.0, 65).unwrap();
    let (u_star, f) = manufactured_pair(grid, &sc).unwrap();
    for (tol, precond) in [(1e-6, PrecondKind::Csl), (1e-8, PrecondKind::Csl)] {
        let (u, stats) =
            solve_with_source(grid, &sc, &f, tol, 4000, precond, 50, None).unwrap();
        assert!(stats.final_relative_residual <= tol);
        let err = rel_error(&u, &u_star);
        assert!(
            err <= 10.0 * tol,
            "tol {tol:.0e}: manufactured error {err:.3e} exceeds 10x tolerance"
        );
    }
}

#[test]
fn reported_residual_matches_recomputation() {
    let sc = free_like(0.1);
    let grid = build_grid(2, 8.0, 65).unwrap();
    let f = WaveField::sample_source(grid, &sc).unwrap();
    let (u, stats) =
        solve_fixed_epsilon_with(grid, &sc, 1e-8, 2000, PrecondKind::Csl, 50, None).unwrap();
    let au = apply_helmholtz_operator(grid, &sc, &u).unwrap();
    // the rhs the solver used is the source with its ring zeroed
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for m in 0..grid.node_count() {
        let fm = if grid.is_boundary(m) { C64::new(0.0, 0.0) } else { f.values[m] };
        num += (au.values[m] - fm).norm_sqr();
        den += fm.norm_sqr();
    }
    let recomputed = (num / den).sqrt();
    assert!(
        (recomputed - stats.final_relative_residual).abs() <= 1e-12 + 0.05 * recomputed,
        "solver reported {:.3e}, recomputation gives {recomputed:.3e}",
        stats.final_relative_residual
    );
    assert!(recomputed <= 1e-8);
}

#[test]
fn gmres_history_is_monotone_on_the_operator() {
    // the Krylov residual history must not rise, in particular across
    // restart boundaries (restart 7 forces many of them)
    let sc = free_like(0.1);
    let grid = build_grid(2, 6.0, 33).unwrap();
    let op = hlab_core::grid::HelmholtzOperator::assemble(grid, &sc).unwrap();
    let mut b = WaveField::sample_source(grid, &sc).unwrap().values;
    for m in 0..grid.node_count() {
        if grid.is_boundary(m) {
            b[m] = C64::new(0.0, 0.0);
        }
    }
    let outcome = gmres_solve(
        |v| {
            let mut out = vec![C64::new(0.0, 0.0); v.len()];
            op.apply(v, &mut out);
            out
        },
        |v| v.to_vec(),
        &b,
        None,
        1e-8,
        7,
        20_000,
    )
    .unwrap();
    assert!(outcome.residual <= 1e-8);
    for pair in outcome.history.windows(2) {
        assert!(
            pair[1] <= pair[0] * (1.0 + 1e-7) + 1e-12,
            "history rose: {} -> {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn warm_start_reuses_the_neighbouring_solution() {
    let grid = build_grid(2, 8.0, 65).unwrap();
    let sc_a = free_like(0.1);
    let (u_a, _) =
        solve_fixed_epsilon_with(grid, &sc_a, 1e-8, 4000, PrecondKind::Csl, 50, None).unwrap();
    let sc_b = free_like(0.09);
    let (_, cold) =
        solve_fixed_epsilon_with(grid, &sc_b, 1e-8, 4000, PrecondKind::Csl, 50, None).unwrap();
    let (_, warm) =
        solve_fixed_epsilon_with(grid, &sc_b, 1e-8, 4000, PrecondKind::Csl, 50, Some(&u_a))
            .unwrap();
    assert!(
        warm.iterations <= cold.iterations,
        "warm start took {} iterations, cold start {}",
        warm.iterations,
        cold.iterations
    );
}

#[test]
fn sweep_report_is_internally_consistent() {
    let sc = free_like(0.9);
    let grid = build_grid(2, 8.0, 65).unwrap();
    let (report, last) = epsilon_sweep_values(
        grid,
        &sc,
        &[0.4, 0.2, 0.1],
        1e-8,
        4000,
        PrecondKind::Csl,
        50,
        true,
    )
    .unwrap();
    assert_eq!(report.epsilons, vec![0.4, 0.2, 0.1]);
    assert_eq!(report.stats.len(), 3);
    assert_eq!(report.reports.len(), 3);
    assert_eq!(report.rho.len(), 3);
    assert_eq!(report.cauchy_gaps.len(), 2);
    for (k, stats) in report.stats.iter().enumerate() {
        assert_eq!(stats.epsilon, report.epsilons[k]);
        assert!(stats.final_relative_residual <= 1e-8);
        assert!(stats.wall_time > 0.0);
    }
    for rho in &report.rho {
        assert!(rho.is_finite() && *rho > 0.0);
    }
    for gap in &report.cauchy_gaps {
        assert!(gap.is_finite() && *gap > 0.0);
    }
    assert!(last.norm_l2() > 0.0);
    assert_eq!(report.stats[2].epsilon, 0.1);
}

#[test]
fn sweep_rejects_bad_schedules() {
    let sc = free_like(0.1);
    let grid = build_grid(2, 6.0, 33).unwrap();
    // increasing
    assert!(epsilon_sweep_values(
        grid,
        &sc,
        &[0.01, 0.1],
        1e-8,
        100,
        PrecondKind::Csl,
        50,
        true
    )
    .is_err());
    // too short
    assert!(
        epsilon_sweep_values(grid, &sc, &[0.1], 1e-8, 100, PrecondKind::Csl, 50, true).is_err()
    );
    // geometric front end validates its own parameters
    assert!(epsilon_sweep(grid, &sc, -0.1, 0.5, 3).is_err());
    assert!(epsilon_sweep(grid, &sc, 0.1, 1.5, 3).is_err());
    assert!(epsilon_sweep(grid, &sc, 0.1, 0.5, 1).is_err());
}

#[test]
fn non_convergence_reports_iterations_and_best_iterate() {
    let sc = free_like(0.01);
    let grid = build_grid(2, 8.0, 65).unwrap();
    let err = solve_fixed_epsilon_with(grid, &sc, 1e-10, 5, PrecondKind::None, 5, None)
        .unwrap_err();
    match err {
        hlab_core::Error::NonConvergence { iterations, residual, history, best, .. } => {
            assert_eq!(iterations, 5);
            assert!(residual > 1e-10);
            assert!(!history.is_empty());
            assert_eq!(best.len(), grid.node_count());
        }
        other => panic!("expected non-convergence, got {other}"),
    }
}

#[test]
fn mismatched_source_grid_is_rejected() {
    let sc = free_like(0.1);
    let grid = build_grid(2, 8.0, 65).unwrap();
    let other = build_grid(2, 8.0, 33).unwrap();
    let f = WaveField::zeros(other);
    assert!(matches!(
        solve_with_source(grid, &sc, &f, 1e-8, 100, PrecondKind::Csl, 50, None),
        Err(hlab_core::Error::Precondition(_))
    ));
}
