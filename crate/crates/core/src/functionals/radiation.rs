//! Radiation-condition functionals, tangential energy and the
//! concentration integral.
//!
//! All three are midpoint sums over the staggered grid with the
//! magnetic gradient evaluated on the fly (centered differences plus
//! i·b at the node), so no gradient field is ever materialized. The
//! region indicator |x| ≥ r_min is volume-corrected on cells that
//! straddle the sphere by a 6^d sub-cell sample, and the boundary ring
//! is excluded.

use crate::eikonal::EikonalSolution;
use crate::error::{Error, Result};
use crate::grid::WaveField;
use crate::model::{differentiate_field, FieldExpr, Scenario};
use crate::{par, C64};

/// Where the phase K of the eikonal-corrected functional comes from.
#[derive(Clone, Copy)]
pub enum KSource<'a> {
    /// K = |x|, ∇K = x/|x| (free phase).
    Modulus,
    /// The closed-form Saito phase for the scenario's λ.
    Saito,
    /// A marched eikonal solution; must cover the whole region.
    March(&'a EikonalSolution),
}

/// Phase correction applied inside the radiation integrand.
#[derive(Clone, Copy)]
pub enum RadiationPhase<'a> {
    /// |∇_b u − i√λ ∇K u|² against the weight (1+|x|)^{δ−1}.
    Eikonal(KSource<'a>),
    /// |∇_b u − i n(x)^{1/2} ω u|² against the weight 1/|x|.
    ExplicitN,
    /// |∇_b u − i n∞(ω)^{1/2} ω u|² against the weight 1/|x|.
    ExplicitNInf,
}

/// Magnetic gradient of u at interior node m, one axis at a time.
fn gradient_at(u: &WaveField, scenario: &Scenario, m: usize, x: &[f64]) -> Result<Vec<C64>> {
    let grid = &u.grid;
    let h = grid.h;
    let mut g = Vec::with_capacity(grid.dimension);
    let with_b = !scenario.b_is_zero();
    for a in 0..grid.dimension {
        let s = grid.stride(a);
        let mut v = (u.values[m + s] - u.values[m - s]) / (2.0 * h);
        if with_b {
            v += C64::new(0.0, scenario.b_at(a, x)?) * u.values[m];
        }
        g.push(v);
    }
    Ok(g)
}

/// Fraction of the cell centered at `x` lying in {|y| ≥ r_min},
/// estimated from a 6^d sub-cell sample.
fn cell_fraction(x: &[f64], h: f64, r_min: f64) -> f64 {
    let d = x.len();
    let sub = 6usize;
    let mut hits = 0usize;
    let total = sub.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let mut r2 = 0.0;
        for xa in x.iter().take(d) {
            let t = (c % sub) as f64;
            c /= sub;
            let y = xa + ((t + 0.5) / sub as f64 - 0.5) * h;
            r2 += y * y;
        }
        if r2.sqrt() >= r_min {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Region weight of node m: 1 deep inside {|x| ≥ r_min}, 0 well
/// outside and on the boundary ring, partial-volume fraction on cells
/// straddling the sphere.
fn region_weight(x: &[f64], r: f64, h: f64, r_min: f64) -> f64 {
    let half_diag = (x.len() as f64).sqrt() * h / 2.0;
    if (r - r_min).abs() < half_diag {
        cell_fraction(x, h, r_min)
    } else if r >= r_min {
        1.0
    } else {
        0.0
    }
}

/// The weighted radiation functional
/// ∫_{|x| ≥ r_min} |∇_b u − i·(phase)·u|² · weight dx
/// with the phase and weight fixed by `phase` (see [`RadiationPhase`]).
pub fn radiation_functional(
    u: &WaveField,
    scenario: &Scenario,
    phase: RadiationPhase<'_>,
    delta: f64,
    region_min_radius: f64,
) -> Result<f64> {
    let grid = &u.grid;
    if grid.dimension != scenario.dimension {
        return Err(Error::Precondition(format!(
            "field dimension {} does not match scenario dimension {}",
            grid.dimension, scenario.dimension
        )));
    }
    if region_min_radius < 1.0_f64.max(scenario.r0) {
        return Err(Error::config(format!(
            "region must start at max(1, r0) = {}, got {region_min_radius}",
            1.0_f64.max(scenario.r0)
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::config(format!("delta must lie in (0, 1], got {delta}")));
    }
    let d = grid.dimension;
    let lambda_sqrt = scenario.lambda.sqrt();

    // probe every expression the integrand touches so failures surface
    // as real errors instead of silent NaN sums
    let x_probe: Vec<f64> = (0..d).map(|a| grid.coord(grid.points / 2 + 1 + a)).collect();
    for a in 0..d {
        scenario.b_at(a, &x_probe)?;
    }
    match &phase {
        RadiationPhase::ExplicitN => {
            let n = scenario.n_at(&x_probe)?;
            if !(n > 0.0) {
                return Err(Error::Hypothesis(format!("n = {n} not positive at {x_probe:?}")));
            }
        }
        RadiationPhase::ExplicitNInf => {
            let ninf = scenario
                .n_inf
                .as_ref()
                .ok_or_else(|| Error::config("scenario does not define n_inf"))?;
            let w: Vec<f64> = {
                let r = x_probe.iter().map(|c| c * c).sum::<f64>().sqrt();
                x_probe.iter().map(|c| c / r).collect()
            };
            let v = ninf.eval(&w)?;
            if !(v > 0.0) {
                return Err(Error::Hypothesis(format!("n_inf = {v} not positive at {w:?}")));
            }
        }
        RadiationPhase::Eikonal(KSource::Saito) => {
            crate::eikonal::saito_constants(scenario.lambda)?;
        }
        RadiationPhase::Eikonal(KSource::March(sol)) => {
            // the farthest region point is the box corner
            let corner = (d as f64).sqrt() * grid.half_width;
            let (lo, hi) = (sol.radii[0], *sol.radii.last().unwrap());
            if lo > region_min_radius || hi < corner {
                return Err(Error::Range(format!(
                    "marched range [{lo:.3}, {hi:.3}] does not cover the region \
                     [{region_min_radius}, {corner:.3}]"
                )));
            }
        }
        RadiationPhase::Eikonal(KSource::Modulus) => {}
    }

    let n_inf = scenario.n_inf.clone();
    let value = par::sum_f64(grid.node_count(), |m| {
        if grid.is_boundary(m) {
            return 0.0;
        }
        let pt = grid.point(m);
        let x = &pt[..d];
        let r = grid.radius(m);
        let w = region_weight(x, r, grid.h, region_min_radius);
        if w == 0.0 {
            return 0.0;
        }
        let inner = || -> Result<f64> {
            let g = gradient_at(u, scenario, m, x)?;
            let uv = u.values[m];
            // the phase vector i·c·(direction)·u, per axis
            let q = match &phase {
                RadiationPhase::Eikonal(src) => {
                    let grad_k: Vec<f64> = match src {
                        KSource::Modulus => x.iter().map(|c| c / r).collect(),
                        KSource::Saito => crate::eikonal::saito_exact(scenario.lambda, x)?.1,
                        KSource::March(sol) => sol.grad_k_at(x)?,
                    };
                    g.iter()
                        .zip(&grad_k)
                        .map(|(ga, ka)| (ga - C64::new(0.0, lambda_sqrt * ka) * uv).norm_sqr())
                        .sum::<f64>()
                }
                RadiationPhase::ExplicitN => {
                    let c = scenario.n_at(x)?.sqrt();
                    g.iter()
                        .enumerate()
                        .map(|(a, ga)| (ga - C64::new(0.0, c * x[a] / r) * uv).norm_sqr())
                        .sum::<f64>()
                }
                RadiationPhase::ExplicitNInf => {
                    let wdir: Vec<f64> = x.iter().map(|c| c / r).collect();
                    let c = n_inf.as_ref().unwrap().eval(&wdir)?.sqrt();
                    g.iter()
                        .enumerate()
                        .map(|(a, ga)| (ga - C64::new(0.0, c * wdir[a]) * uv).norm_sqr())
                        .sum::<f64>()
                }
            };
            let weight = match &phase {
                RadiationPhase::Eikonal(_) => (1.0 + r).powf(delta - 1.0),
                _ => 1.0 / r,
            };
            Ok(w * q * weight)
        };
        inner().unwrap_or(f64::NAN)
    }) * grid.cell_volume();

    if !value.is_finite() {
        return Err(Error::Domain(
            "radiation integrand evaluated to a non-finite value inside the region".into(),
        ));
    }
    Ok(value)
}

/// Tangential magnetic energy ∫ |∇_b^⊥ u|² / |x| dx over the whole
/// grid interior: the squared gradient minus its radial projection.
pub fn tangential_energy(u: &WaveField, scenario: &Scenario) -> Result<f64> {
    let grid = &u.grid;
    if grid.dimension != scenario.dimension {
        return Err(Error::Precondition(format!(
            "field dimension {} does not match scenario dimension {}",
            grid.dimension, scenario.dimension
        )));
    }
    let d = grid.dimension;
    let x_probe: Vec<f64> = (0..d).map(|a| grid.coord(grid.points / 2 + 1 + a)).collect();
    for a in 0..d {
        scenario.b_at(a, &x_probe)?;
    }
    let value = par::sum_f64(grid.node_count(), |m| {
        if grid.is_boundary(m) {
            return 0.0;
        }
        let pt = grid.point(m);
        let x = &pt[..d];
        let r = grid.radius(m);
        let inner = || -> Result<f64> {
            let g = gradient_at(u, scenario, m, x)?;
            let total: f64 = g.iter().map(|v| v.norm_sqr()).sum();
            let radial: C64 = g
                .iter()
                .enumerate()
                .map(|(a, v)| v * (x[a] / r))
                .fold(C64::new(0.0, 0.0), |acc, v| acc + v);
            Ok((total - radial.norm_sqr()).max(0.0) / r)
        };
        inner().unwrap_or(f64::NAN)
    }) * grid.cell_volume();
    if !value.is_finite() {
        return Err(Error::Domain(
            "tangential-energy integrand evaluated to a non-finite value".into(),
        ));
    }
    Ok(value)
}

/// Concentration integral ∫_{|x| ≥ R} |∇_ω n∞|² |u|² / |x| dx,
/// with |∇_ω n∞|² = |x|²·|∇^⊥ n∞|² from finite differences of the
/// angular index.
pub fn concentration_functional(u: &WaveField, n_inf: &FieldExpr, big_r: f64) -> Result<f64> {
    let grid = &u.grid;
    let d = grid.dimension;
    if big_r < 1.0 {
        return Err(Error::config(format!("concentration radius R must be >= 1, got {big_r}")));
    }
    // n∞ must depend on the direction only: its derivative along any
    // ray must vanish (exactly, for expressions in the w-variables)
    let dirs: Vec<Vec<f64>> = if d == 2 {
        (0..12)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.3) / 12.0;
                vec![t.cos(), t.sin()]
            })
            .collect()
    } else {
        let mut v = Vec::new();
        for i in 0..3 {
            for j in 0..4 {
                let t = (i as f64 + 0.5) * std::f64::consts::PI / 3.0;
                let p = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 4.0;
                v.push(vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
            }
        }
        v
    };
    let dr = 1e-3;
    for w in &dirs {
        for r in [1.0, 3.0] {
            let hi: Vec<f64> = w.iter().map(|c| c * (r + dr)).collect();
            let lo: Vec<f64> = w.iter().map(|c| c * (r - dr)).collect();
            let slope = (n_inf.eval(&hi)? - n_inf.eval(&lo)?) / (2.0 * dr);
            if slope.abs() > 1e-10 {
                return Err(Error::Precondition(format!(
                    "n_inf is not purely angular: radial derivative {slope:.3e} at direction \
                     {w:?}"
                )));
            }
        }
    }

    let value = par::sum_f64(grid.node_count(), |m| {
        let r = grid.radius(m);
        if r < big_r {
            return 0.0;
        }
        let pt = grid.point(m);
        let x = &pt[..d];
        let inner = || -> Result<f64> {
            let mut grad = [0.0; 3];
            for (a, ga) in grad.iter_mut().take(d).enumerate() {
                *ga = differentiate_field(n_inf, x, a, None)?;
            }
            let radial: f64 = (0..d).map(|a| grad[a] * x[a] / r).sum();
            let perp_sq: f64 =
                (0..d).map(|a| grad[a] * grad[a]).sum::<f64>() - radial * radial;
            let w_ang = (r * r * perp_sq).max(0.0);
            Ok(w_ang * u.values[m].norm_sqr() / r)
        };
        inner().unwrap_or(f64::NAN)
    }) * grid.cell_volume();
    if !value.is_finite() {
        return Err(Error::Domain(
            "concentration integrand evaluated to a non-finite value".into(),
        ));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::parse_scenario;

    fn free_scenario(d: usize) -> Scenario {
        parse_scenario(&format!(
            "[scenario]\ndimension = {d}\nlambda = 1\nepsilon = 0.01\n[fields]\nf_re = \
             \"exp(-r^2)\"\n"
        ))
        .unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = build_grid(2, 6.0, 33).unwrap();
        let u = WaveField::zeros(g);
        let sc = free_scenario(2);
        for phase in [
            RadiationPhase::Eikonal(KSource::Modulus),
            RadiationPhase::ExplicitN,
        ] {
            assert_eq!(radiation_functional(&u, &sc, phase, 1.0, 1.0).unwrap(), 0.0);
        }
        assert_eq!(tangential_energy(&u, &sc).unwrap(), 0.0);
        let ninf = FieldExpr::constant(1.0);
        assert_eq!(concentration_functional(&u, &ninf, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn radial_field_has_no_tangential_energy() {
        let g = build_grid(2, 6.0, 65).unwrap();
        let u = WaveField::sample(g, |x: &[f64]| {
            let r2 = x.iter().map(|c| c * c).sum::<f64>();
            Ok(C64::new((-r2 / 2.0).exp(), 0.0))
        })
        .unwrap();
        let sc = free_scenario(2);
        let t = tangential_energy(&u, &sc).unwrap();
        // pure truncation error of the centered stencil (h ≈ 0.19)
        assert!(t < 1e-4, "tangential energy of radial field: {t}");
    }

    #[test]
    fn constant_n_inf_concentrates_nothing() {
        let g = build_grid(2, 6.0, 33).unwrap();
        let u = WaveField::sample(g, |_: &[f64]| Ok(C64::new(1.0, 0.0))).unwrap();
        let ninf = FieldExpr::constant(2.5);
        let v = concentration_functional(&u, &ninf, 1.0).unwrap();
        assert!(v.abs() < 1e-18);
    }

    #[test]
    fn radial_n_inf_is_rejected() {
        let g = build_grid(2, 6.0, 33).unwrap();
        let u = WaveField::zeros(g);
        let ninf = FieldExpr::parse("2 + 1/r").unwrap();
        assert!(matches!(
            concentration_functional(&u, &ninf, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn region_weight_is_a_partial_volume() {
        // node exactly on the sphere: about half the cell is outside
        let w = region_weight(&[1.0, 0.0], 1.0, 0.25, 1.0);
        assert!(w > 0.3 && w < 0.7, "straddle fraction {w}");
        assert_eq!(region_weight(&[3.0, 0.0], 3.0, 0.25, 1.0), 1.0);
        assert_eq!(region_weight(&[0.25, 0.0], 0.25, 0.25, 1.0), 0.0);
    }

    #[test]
    fn explicit_ninf_needs_n_inf() {
        let g = build_grid(2, 6.0, 33).unwrap();
        let u = WaveField::zeros(g);
        let sc = free_scenario(2);
        assert!(matches!(
            radiation_functional(&u, &sc, RadiationPhase::ExplicitNInf, 1.0, 1.0),
            Err(Error::Config(_))
        ));
    }
}
