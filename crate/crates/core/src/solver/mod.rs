//! Fixed-ε solves and the decreasing-ε sweep.
//!
//! For each ε > 0 the discrete system A_ε u = f (the Peierls operator of
//! the grid module, homogeneous Dirichlet ring) is solved matrix-free by
//! restarted GMRES. Preconditioning is pluggable: identity, the diagonal
//! of A, or a complex-shifted Laplacian (Δ_h + σ)⁻¹ applied exactly by
//! fast sine transforms, with σ = n̄·(1 + i/2) tracking the grid mean n̄
//! of the index of refraction.
//!
//! The sweep realizes the limiting-absorption procedure: it solves along
//! a decreasing ε sequence (warm-starting each solve with the previous
//! solution), records the uniform-boundedness ratio
//! ρ = (λ|||u|||₁² + |||∇_b u|||₁²)/N₁(f)² at every step, and measures
//! Cauchy gaps |||u_{ε_k} − u_{ε_{k+1}}|||₁ between consecutive
//! solutions. Whether the gaps decay is *measured* and reported, never
//! assumed.

mod dst;
mod gmres;

pub use gmres::{gmres as gmres_solve, GmresOutcome};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::functionals::{self, FunctionalName, FunctionalReport};
use crate::grid::{magnetic_gradient, Grid, HelmholtzOperator, WaveField};
use crate::model::{PrecondKind, Scenario, SolverSettings};
use crate::{par, C64};

/// Outcome bookkeeping of one fixed-ε solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    /// Krylov (inner) iterations performed.
    pub iterations: usize,
    /// True relative residual ‖Au − f‖/‖f‖ at exit.
    pub final_relative_residual: f64,
    /// Wall-clock seconds of the solve.
    pub wall_time: f64,
    /// The ε this solve used.
    pub epsilon: f64,
}

/// Record of an ε-sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Strictly decreasing ε values, one per solve.
    pub epsilons: Vec<f64>,
    /// Per-ε solver stats (same order as `epsilons`).
    pub stats: Vec<SolveStats>,
    /// Per-ε functional report: |||u_ε|||₁ (Morrey–Campanato at R₀=1).
    pub reports: Vec<FunctionalReport>,
    /// Uniform-boundedness ratio ρ = (λ|||u|||₁² + |||∇_b u|||₁²)/N₁(f)²
    /// per ε (0 when f ≡ 0).
    pub rho: Vec<f64>,
    /// |||u_{ε_k} − u_{ε_{k+1}}|||₁ for consecutive pairs
    /// (length = len(epsilons) − 1).
    pub cauchy_gaps: Vec<f64>,
}

fn validate_common(grid: Grid, scenario: &Scenario, tol: f64) -> Result<()> {
    if grid.dimension != scenario.dimension {
        return Err(Error::Precondition(format!(
            "grid dimension {} does not match scenario dimension {}",
            grid.dimension, scenario.dimension
        )));
    }
    if !(scenario.epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "limiting absorption requires epsilon > 0, got {}",
            scenario.epsilon
        )));
    }
    if !(tol > 1e-14 && tol < 1e-2) {
        return Err(Error::Precondition(format!(
            "solver tolerance must lie in (1e-14, 1e-2), got {tol}"
        )));
    }
    Ok(())
}

/// Grid mean of the index of refraction (the real scale of the CSL
/// shift).
fn mean_n(grid: Grid, scenario: &Scenario) -> Result<f64> {
    // probe once so expression errors surface with context
    scenario.n_at(&grid.point(grid.node_count() / 2)[..grid.dimension])?;
    let total = par::sum_f64(grid.node_count(), |m| {
        scenario.n_at(&grid.point(m)[..grid.dimension]).unwrap_or(f64::NAN)
    });
    if !total.is_finite() {
        return Err(Error::Domain("index of refraction evaluated to a non-finite value".into()));
    }
    Ok(total / grid.node_count() as f64)
}

/// Solve A u = f at the scenario's ε with the default settings of the
/// operation contract: diagonal preconditioning, restart 50, zero
/// initial guess. See [`solve_fixed_epsilon_with`] for the knobs.
pub fn solve_fixed_epsilon(
    grid: Grid,
    scenario: &Scenario,
    tol: f64,
    max_iter: usize,
) -> Result<(WaveField, SolveStats)> {
    solve_fixed_epsilon_with(grid, scenario, tol, max_iter, PrecondKind::Diagonal, 50, None)
}

/// Solve A u = f at the scenario's ε.
///
/// `precond` selects the preconditioner (identity, diagonal of A, or
/// the fast-transform complex-shifted Laplacian), `restart` the GMRES
/// cycle length, and `warm` an optional initial guess (it must live on
/// the same grid).
pub fn solve_fixed_epsilon_with(
    grid: Grid,
    scenario: &Scenario,
    tol: f64,
    max_iter: usize,
    precond: PrecondKind,
    restart: usize,
    warm: Option<&WaveField>,
) -> Result<(WaveField, SolveStats)> {
    let source = WaveField::sample_source(grid, scenario)?;
    solve_with_source(grid, scenario, &source, tol, max_iter, precond, restart, warm)
}

/// Solve A u = f for an explicitly given discrete right-hand side
/// (manufactured problems, externally sampled sources). The scenario
/// supplies the operator coefficients; its `f_re`/`f_im` expressions
/// are ignored. The ring entries of `source` are treated as zero (the
/// Dirichlet condition fixes them).
#[allow(clippy::too_many_arguments)]
pub fn solve_with_source(
    grid: Grid,
    scenario: &Scenario,
    source: &WaveField,
    tol: f64,
    max_iter: usize,
    precond: PrecondKind,
    restart: usize,
    warm: Option<&WaveField>,
) -> Result<(WaveField, SolveStats)> {
    validate_common(grid, scenario, tol)?;
    if restart == 0 {
        return Err(Error::config("restart length must be at least 1"));
    }
    if source.grid != grid {
        return Err(Error::Precondition("source field lives on a different grid".into()));
    }
    if let Some(w) = warm {
        if w.grid != grid {
            return Err(Error::Precondition("warm-start field lives on a different grid".into()));
        }
    }
    let t0 = Instant::now();
    let op = HelmholtzOperator::assemble(grid, scenario)?;

    // right-hand side: the source with the Dirichlet ring pinned to zero
    let mut b = source.values.clone();
    par::for_each_index(&mut b, |m, v| {
        if grid.is_boundary(m) {
            *v = C64::new(0.0, 0.0);
        }
    });

    let apply_a = |v: &[C64]| {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        op.apply(v, &mut out);
        out
    };

    let outcome = match precond {
        PrecondKind::None => gmres::gmres(
            apply_a,
            |v: &[C64]| v.to_vec(),
            &b,
            warm.map(|w| w.values.as_slice()),
            tol,
            restart,
            max_iter,
        )?,
        PrecondKind::Diagonal => {
            let diag = op.diagonal();
            let inv: Vec<C64> = diag
                .iter()
                .enumerate()
                .map(|(m, d)| {
                    if grid.is_boundary(m) || *d == C64::new(0.0, 0.0) {
                        C64::new(0.0, 0.0)
                    } else {
                        1.0 / d
                    }
                })
                .collect();
            gmres::gmres(
                apply_a,
                move |v: &[C64]| {
                    let mut out = vec![C64::new(0.0, 0.0); v.len()];
                    par::fill_c64(&mut out, |m| inv[m] * v[m]);
                    out
                },
                &b,
                warm.map(|w| w.values.as_slice()),
                tol,
                restart,
                max_iter,
            )?
        }
        PrecondKind::Csl => {
            let sigma = C64::new(1.0, 0.5) * mean_n(grid, scenario)?;
            let plan = dst::CslPlan::new(grid, sigma);
            gmres::gmres(
                apply_a,
                move |v: &[C64]| plan.apply(v),
                &b,
                warm.map(|w| w.values.as_slice()),
                tol,
                restart,
                max_iter,
            )?
        }
    };

    let stats = SolveStats {
        iterations: outcome.iterations,
        final_relative_residual: outcome.residual,
        wall_time: t0.elapsed().as_secs_f64(),
        epsilon: scenario.epsilon,
    };
    let u = WaveField { grid, values: outcome.x };
    u.check_finite()?;
    Ok((u, stats))
}

/// The uniform-boundedness ratio ρ of one solution: numerator
/// λ·|||u|||₁² + |||∇_b u|||₁², denominator N₁(f)² with f sampled on
/// the full grid. Returns 0 when the source vanishes.
fn rho_of(u: &WaveField, scenario: &Scenario) -> Result<f64> {
    let grid = u.grid;
    let f = WaveField::sample_source(grid, scenario)?;
    let nf = functionals::dual_norm(&f, 1.0)?;
    if nf == 0.0 {
        return Ok(0.0);
    }
    let mc_u = functionals::mc_norm(u, 1.0)?;
    let grad = magnetic_gradient(grid, scenario, u)?;
    let grad_sq: Vec<f64> = (0..grid.node_count()).map(|m| grad.norm_sqr_at(m)).collect();
    let mc_g = functionals::mc_norm_of_squares(grid, &grad_sq, 1.0)?;
    Ok((scenario.lambda * mc_u * mc_u + mc_g * mc_g) / (nf * nf))
}

/// ε-sweep on the default geometric schedule ε_k = eps_start·factor^k,
/// k = 0..count, with the default solver settings (CSL preconditioning,
/// tolerance 1e-8) and warm starts.
pub fn epsilon_sweep(
    grid: Grid,
    scenario: &Scenario,
    eps_start: f64,
    factor: f64,
    count: usize,
) -> Result<SweepReport> {
    if !(eps_start > 0.0) {
        return Err(Error::config(format!("eps_start must be positive, got {eps_start}")));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::config(format!("eps factor must lie in (0,1), got {factor}")));
    }
    if count < 2 {
        return Err(Error::config(format!("sweep needs at least 2 steps, got {count}")));
    }
    let epsilons: Vec<f64> = (0..count).map(|k| eps_start * factor.powi(k as i32)).collect();
    let defaults = SolverSettings::default();
    epsilon_sweep_values(
        grid,
        scenario,
        &epsilons,
        defaults.tol,
        defaults.max_iter,
        defaults.preconditioner,
        defaults.restart,
        true,
    )
    .map(|(report, _)| report)
}

/// ε-sweep over an explicit strictly decreasing ε list. Returns the
/// report and the final (smallest-ε) solution.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_sweep_values(
    grid: Grid,
    scenario: &Scenario,
    epsilons: &[f64],
    tol: f64,
    max_iter: usize,
    precond: PrecondKind,
    restart: usize,
    warm_start: bool,
) -> Result<(SweepReport, WaveField)> {
    if epsilons.len() < 2 {
        return Err(Error::config(format!(
            "sweep needs at least 2 epsilon values, got {}",
            epsilons.len()
        )));
    }
    for pair in epsilons.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::config(format!(
                "epsilon sequence must be strictly decreasing, got {pair:?}"
            )));
        }
    }
    if !(epsilons[epsilons.len() - 1] > 0.0) {
        return Err(Error::Precondition(format!(
            "limiting absorption requires epsilon > 0, got {}",
            epsilons[epsilons.len() - 1]
        )));
    }

    let mut report = SweepReport {
        epsilons: Vec::new(),
        stats: Vec::new(),
        reports: Vec::new(),
        rho: Vec::new(),
        cauchy_gaps: Vec::new(),
    };
    let mut prev: Option<WaveField> = None;
    for &eps in epsilons {
        let mut sc = scenario.clone();
        sc.epsilon = eps;
        let (u, stats) = solve_fixed_epsilon_with(
            grid,
            &sc,
            tol,
            max_iter,
            precond,
            restart,
            if warm_start { prev.as_ref() } else { None },
        )?;
        report.epsilons.push(eps);
        report.stats.push(stats);
        let mc_u = functionals::mc_norm(&u, 1.0)?;
        let mut rep = FunctionalReport::new(FunctionalName::McNorm, mc_u);
        rep.r0 = Some(1.0);
        rep.lambda = Some(sc.lambda);
        report.reports.push(rep);
        report.rho.push(rho_of(&u, &sc)?);
        if let Some(p) = &prev {
            let diff: Vec<f64> =
                (0..grid.node_count()).map(|m| (u.values[m] - p.values[m]).norm_sqr()).collect();
            report.cauchy_gaps.push(functionals::mc_norm_of_squares(grid, &diff, 1.0)?);
        }
        prev = Some(u);
    }
    Ok((report, prev.expect("at least two solves")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::parse_scenario;

    #[test]
    fn epsilon_zero_is_rejected() {
        let sc = parse_scenario(
            "[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0\n[fields]\nf_re = \"exp(-r^2)\"\n",
        )
        .unwrap();
        let grid = build_grid(2, 4.0, 17).unwrap();
        assert!(matches!(
            solve_fixed_epsilon(grid, &sc, 1e-8, 100),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tolerance_range_is_enforced() {
        let sc = parse_scenario(
            "[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0.1\n[fields]\nf_re = \"exp(-r^2)\"\n",
        )
        .unwrap();
        let grid = build_grid(2, 4.0, 17).unwrap();
        assert!(matches!(
            solve_fixed_epsilon(grid, &sc, 1e-1, 100),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            solve_fixed_epsilon(grid, &sc, 1e-15, 100),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_source_solves_to_zero_instantly() {
        let sc = parse_scenario(
            "[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0.1\n",
        )
        .unwrap();
        let grid = build_grid(2, 4.0, 33).unwrap();
        let (u, stats) = solve_fixed_epsilon(grid, &sc, 1e-8, 100).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(u.values.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn small_manufactured_solve_with_each_preconditioner() {
        let sc = parse_scenario(
            "[scenario]\ndimension = 2\nlambda = 1.5\nepsilon = 0.3\n[fields]\nf_re = \
             \"exp(-r^2)\"\nf_im = \"0.2*exp(-r^2/2)\"\n",
        )
        .unwrap();
        let grid = build_grid(2, 5.0, 33).unwrap();
        let mut reference: Option<Vec<C64>> = None;
        for precond in [PrecondKind::None, PrecondKind::Diagonal, PrecondKind::Csl] {
            let (u, stats) =
                solve_fixed_epsilon_with(grid, &sc, 1e-10, 4000, precond, 40, None).unwrap();
            assert!(stats.final_relative_residual <= 1e-10);
            match &reference {
                None => reference = Some(u.values),
                Some(r) => {
                    let err = u
                        .values
                        .iter()
                        .zip(r)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-7, "preconditioners disagree: {err}");
                }
            }
        }
    }

    #[test]
    fn sweep_validates_schedule() {
        let sc = parse_scenario(
            "[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0.1\n[fields]\nf_re = \"exp(-r^2)\"\n",
        )
        .unwrap();
        let grid = build_grid(2, 4.0, 17).unwrap();
        assert!(epsilon_sweep(grid, &sc, 0.0, 0.5, 3).is_err());
        assert!(epsilon_sweep(grid, &sc, 0.1, 1.5, 3).is_err());
        assert!(epsilon_sweep(grid, &sc, 0.1, 0.5, 1).is_err());
    }
}
