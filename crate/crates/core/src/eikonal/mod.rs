//! Eikonal phase K with |∇K|² = 1 + p̃, solved by radial marching.
//!
//! In the scaled variable g = K/|x| and s = log|x| the eikonal equation
//! becomes a first-order angular-field ODE,
//!
//! ```text
//!     dg/ds = −1 + √(2 + p̃ − g² − |∇_ω g|²),
//! ```
//!
//! (the root chosen so that the free case p̃ ≡ 0, g ≡ 1 is a fixed
//! point), which is integrated shell-to-shell with the classical 4-stage
//! Runge–Kutta scheme on a geometric radius ladder r₀ρᵐ. Angular
//! derivatives are spectral (FFT) on the circle in d=2 and centered
//! differences on a staggered latitude–longitude grid in d=3, with ghost
//! rows continued across the poles via g(−θ, φ) = g(θ, φ+π).
//!
//! The Saito index p̃ = −ω₁/λ has the closed-form solution
//! K = a(λ)|x| − b(λ)x₁ ([`saito_exact`]), an exact fixed point of the
//! march that serves as the module's precision oracle.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{FieldExpr, InitKind};
use crate::C64;

/// Radicand floor: below this the square root (and the small-C* regime
/// it encodes) is considered lost.
const RADICAND_MARGIN: f64 = 0.01;

/// Steady-state threshold for the outer shell in [`g_infinity_check`].
const STEADY_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------
// Angular grid
// ---------------------------------------------------------------------

/// Discretization of the unit sphere: equispaced angles on the circle
/// (d=2, spectral derivatives) or a staggered latitude–longitude grid
/// (d=3, centered differences; no sample sits on a pole).
#[derive(Clone)]
pub struct AngularGrid {
    pub dimension: usize,
    /// d=2: points on the circle. d=3: latitude rows.
    pub m_theta: usize,
    /// d=3: longitude columns (= 2·m_theta). d=2: unused (0).
    pub m_phi: usize,
    fft_fwd: Option<Arc<dyn Fft<f64>>>,
    fft_inv: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for AngularGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularGrid")
            .field("dimension", &self.dimension)
            .field("m_theta", &self.m_theta)
            .field("m_phi", &self.m_phi)
            .finish()
    }
}

impl AngularGrid {
    /// `angles` is the number of circle points (d=2) or latitude rows
    /// (d=3; longitude gets twice that). Minimum 32.
    pub fn new(dimension: usize, angles: usize) -> Result<AngularGrid> {
        if !matches!(dimension, 2 | 3) {
            return Err(Error::config(format!("dimension must be 2 or 3, got {dimension}")));
        }
        if angles < 32 {
            return Err(Error::config(format!("angular resolution must be >= 32, got {angles}")));
        }
        let (fft_fwd, fft_inv) = if dimension == 2 {
            let mut planner = FftPlanner::new();
            (
                Some(planner.plan_fft_forward(angles)),
                Some(planner.plan_fft_inverse(angles)),
            )
        } else {
            (None, None)
        };
        Ok(AngularGrid {
            dimension,
            m_theta: angles,
            m_phi: if dimension == 3 { 2 * angles } else { 0 },
            fft_fwd,
            fft_inv,
        })
    }

    /// Number of angular samples.
    pub fn len(&self) -> usize {
        if self.dimension == 2 {
            self.m_theta
        } else {
            self.m_theta * self.m_phi
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn theta(&self, i: usize) -> f64 {
        if self.dimension == 2 {
            2.0 * std::f64::consts::PI * i as f64 / self.m_theta as f64
        } else {
            (i as f64 + 0.5) * std::f64::consts::PI / self.m_theta as f64
        }
    }

    fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.m_phi as f64
    }

    /// Unit direction of sample `k` (third component 0 in d=2; in d=3
    /// the poles lie on the x₃ axis).
    pub fn direction(&self, k: usize) -> [f64; 3] {
        if self.dimension == 2 {
            let t = self.theta(k);
            [t.cos(), t.sin(), 0.0]
        } else {
            let (i, j) = (k / self.m_phi, k % self.m_phi);
            let (t, p) = (self.theta(i), self.phi(j));
            [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
        }
    }

    /// d/dθ on the circle by FFT (d=2 only). Integer wavenumbers
    /// 0,…,M/2−1,−M/2,…,−1; real part taken after the inverse
    /// transform.
    fn d_theta_spectral(&self, g: &[f64], order: u32) -> Vec<f64> {
        let m = self.m_theta;
        let mut buf: Vec<C64> = g.iter().map(|v| C64::new(*v, 0.0)).collect();
        self.fft_fwd.as_ref().unwrap().process(&mut buf);
        for (idx, c) in buf.iter_mut().enumerate() {
            let k = if idx < (m + 1) / 2 { idx as f64 } else { idx as f64 - m as f64 };
            let factor = match order {
                1 => C64::new(0.0, k),
                _ => C64::new(-k * k, 0.0),
            };
            *c *= factor;
        }
        self.fft_inv.as_ref().unwrap().process(&mut buf);
        buf.iter().map(|c| c.re / m as f64).collect()
    }

    /// Index with the pole-crossing ghost rule: latitude row −1 (or
    /// m_theta) maps to row 0 (or m_theta−1) half a turn away in
    /// longitude.
    fn sample_3d(&self, g: &[f64], i: isize, j: usize) -> f64 {
        let (mt, mp) = (self.m_theta as isize, self.m_phi);
        let (ii, jj) = if i < 0 {
            ((-1 - i) as usize, (j + mp / 2) % mp)
        } else if i >= mt {
            ((2 * mt - 1 - i) as usize, (j + mp / 2) % mp)
        } else {
            (i as usize, j)
        };
        g[ii * mp + jj]
    }

    /// First angular derivatives of a field on this grid:
    /// returns (∂g/∂θ, ∂g/∂φ); the φ component is empty in d=2.
    fn first_derivatives(&self, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if self.dimension == 2 {
            return (self.d_theta_spectral(g, 1), Vec::new());
        }
        let (mt, mp) = (self.m_theta, self.m_phi);
        let dt = std::f64::consts::PI / mt as f64;
        let dp = 2.0 * std::f64::consts::PI / mp as f64;
        let mut gt = vec![0.0; mt * mp];
        let mut gp = vec![0.0; mt * mp];
        for i in 0..mt {
            for j in 0..mp {
                gt[i * mp + j] = (self.sample_3d(g, i as isize + 1, j)
                    - self.sample_3d(g, i as isize - 1, j))
                    / (2.0 * dt);
                gp[i * mp + j] =
                    (g[i * mp + (j + 1) % mp] - g[i * mp + (j + mp - 1) % mp]) / (2.0 * dp);
            }
        }
        (gt, gp)
    }

    /// Squared tangential gradient |∇_ω g|² per sample.
    fn angular_gradient_sq(&self, g: &[f64]) -> Vec<f64> {
        let (gt, gp) = self.first_derivatives(g);
        if self.dimension == 2 {
            return gt.iter().map(|v| v * v).collect();
        }
        let mp = self.m_phi;
        gt.iter()
            .zip(&gp)
            .enumerate()
            .map(|(k, (t, p))| {
                let sin_t = self.theta(k / mp).sin();
                t * t + (p / sin_t) * (p / sin_t)
            })
            .collect()
    }

    /// Longitude-averaged continuation values at the two poles (d=3).
    pub fn pole_values(&self, g: &[f64]) -> Option<(f64, f64)> {
        if self.dimension != 3 {
            return None;
        }
        let mp = self.m_phi;
        let north = g[..mp].iter().sum::<f64>() / mp as f64;
        let south = g[(self.m_theta - 1) * mp..].iter().sum::<f64>() / mp as f64;
        Some((north, south))
    }
}

// ---------------------------------------------------------------------
// Saito closed form
// ---------------------------------------------------------------------

/// The coefficients of the Saito phase K = a(λ)|x| − b(λ)x₁:
/// a = ½[√(1+1/λ) + √(1−1/λ)], b = ½[√(1+1/λ) − √(1−1/λ)].
pub fn saito_constants(lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 1.0) {
        return Err(Error::Domain(format!(
            "the Saito closed form requires lambda > 1, got {lambda}"
        )));
    }
    let p = (1.0 + 1.0 / lambda).sqrt();
    let q = (1.0 - 1.0 / lambda).sqrt();
    Ok((0.5 * (p + q), 0.5 * (p - q)))
}

/// Closed-form K and ∇K for the Saito index p̃ = −ω₁/λ:
/// K = a|x| − b·x₁, ∇K = a·x/|x| − b·e₁. Note a² + b² = 1 and
/// 2ab = 1/λ, whence |∇K|² = 1 − ω₁/λ exactly.
pub fn saito_exact(lambda: f64, point: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = saito_constants(lambda)?;
    let r = point.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::Domain("saito_exact requires |x| > 0".into()));
    }
    let k = a * r - b * point[0];
    let mut grad: Vec<f64> = point.iter().map(|c| a * c / r).collect();
    grad[0] -= b;
    Ok((k, grad))
}

// ---------------------------------------------------------------------
// The march
// ---------------------------------------------------------------------

/// The marched phase: g = K/|x| on every shell of the radius ladder,
/// with the ODE slope dg/ds kept for radial reconstruction.
#[derive(Debug, Clone)]
pub struct EikonalSolution {
    pub angular: AngularGrid,
    /// Shell radii r₀ρᵐ (the last one ≥ r_max).
    pub radii: Vec<f64>,
    /// g per shell (outer index) and angle (inner index).
    pub g: Vec<Vec<f64>>,
    /// dg/ds (= r·∂_r g) per shell and angle.
    pub dg_ds: Vec<Vec<f64>>,
    /// Measured min/max of g over all samples (Barles bounds).
    pub c0: f64,
    pub c1: f64,
    // cached angular derivatives per shell
    g_theta: Vec<Vec<f64>>,
    g_phi: Vec<Vec<f64>>,
}

/// Initial angular profile for the march.
pub fn initial_profile(
    kind: InitKind,
    ang: &AngularGrid,
    p_tilde: &FieldExpr,
    lambda: f64,
    r0: f64,
) -> Result<Vec<f64>> {
    let mut g0 = vec![0.0; ang.len()];
    match kind {
        InitKind::One => g0.fill(1.0),
        InitKind::SqrtN => {
            for (k, slot) in g0.iter_mut().enumerate() {
                let w = ang.direction(k);
                let x: Vec<f64> = w[..ang.dimension].iter().map(|c| c * r0).collect();
                let v = 1.0 + p_tilde.eval(&x)?;
                if !(v > 0.0) {
                    return Err(Error::Domain(format!(
                        "cannot initialize g = sqrt(1+p̃): 1+p̃ = {v} at {x:?}"
                    )));
                }
                *slot = v.sqrt();
            }
        }
        InitKind::Saito => {
            let (a, b) = saito_constants(lambda)?;
            for (k, slot) in g0.iter_mut().enumerate() {
                *slot = a - b * ang.direction(k)[0];
            }
        }
    }
    Ok(g0)
}

/// March g outward from r₀ to (at least) r_max on shells r₀ρᵐ.
///
/// `init` is the angular profile at r₀ (see [`initial_profile`]). The
/// radicand 2 + p̃ − g² − |∇_ωg|² must stay above a fixed margin; when
/// it does not, the index perturbation is too large for the marching
/// regime and the failing shell is reported.
pub fn march_g(
    p_tilde: &FieldExpr,
    ang: &AngularGrid,
    r0: f64,
    r_max: f64,
    rho: f64,
    init: &[f64],
) -> Result<EikonalSolution> {
    if !(r0 > 0.0) || !(r_max > r0) || !(rho > 1.0) {
        return Err(Error::config(format!(
            "march requires 0 < r0 < r_max and rho > 1 (got r0={r0}, r_max={r_max}, rho={rho})"
        )));
    }
    if p_tilde.max_axis() > ang.dimension {
        return Err(Error::config(format!(
            "p_tilde references axis {} beyond dimension {}",
            p_tilde.max_axis(),
            ang.dimension
        )));
    }
    if init.len() != ang.len() {
        return Err(Error::config(format!(
            "initial profile has {} samples, angular grid has {}",
            init.len(),
            ang.len()
        )));
    }
    let ds = rho.ln();
    let steps = ((r_max / r0).ln() / ds).ceil() as usize;

    // the ODE right-hand side at radius r for angular field g
    let rhs = |g: &[f64], r: f64| -> Result<Vec<f64>> {
        let grad_sq = ang.angular_gradient_sq(g);
        let mut out = vec![0.0; g.len()];
        for (k, slot) in out.iter_mut().enumerate() {
            let w = ang.direction(k);
            let x: Vec<f64> = w[..ang.dimension].iter().map(|c| c * r).collect();
            let radicand = 2.0 + p_tilde.eval(&x)? - g[k] * g[k] - grad_sq[k];
            if radicand < RADICAND_MARGIN {
                return Err(Error::EikonalBreakdown { r, radicand });
            }
            *slot = -1.0 + radicand.sqrt();
        }
        Ok(out)
    };

    let mut radii = Vec::with_capacity(steps + 1);
    let mut shells = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let mut g = init.to_vec();
    let mut s = r0.ln();
    radii.push(r0);
    slopes.push(rhs(&g, r0)?);
    shells.push(g.clone());
    for _ in 0..steps {
        let k1 = slopes.last().unwrap().clone();
        let stage = |base: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, kk)| b + c * ds * kk).collect()
        };
        let k2 = rhs(&stage(&g, &k1, 0.5), (s + 0.5 * ds).exp())?;
        let k3 = rhs(&stage(&g, &k2, 0.5), (s + 0.5 * ds).exp())?;
        let k4 = rhs(&stage(&g, &k3, 1.0), (s + ds).exp())?;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += (ds / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += ds;
        let r = s.exp();
        radii.push(r);
        slopes.push(rhs(&g, r)?);
        shells.push(g.clone());
    }

    let mut c0 = f64::INFINITY;
    let mut c1 = f64::NEG_INFINITY;
    for shell in &shells {
        for v in shell {
            c0 = c0.min(*v);
            c1 = c1.max(*v);
        }
    }
    if !(c0 > 0.0) {
        return Err(Error::Hypothesis(format!(
            "marched g lost positivity (min {c0}); the perturbation is outside the marching regime"
        )));
    }

    let mut g_theta = Vec::with_capacity(shells.len());
    let mut g_phi = Vec::with_capacity(shells.len());
    for shell in &shells {
        let (gt, gp) = ang.first_derivatives(shell);
        g_theta.push(gt);
        g_phi.push(gp);
    }

    Ok(EikonalSolution {
        angular: ang.clone(),
        radii,
        g: shells,
        dg_ds: slopes,
        c0,
        c1,
        g_theta,
        g_phi,
    })
}

impl EikonalSolution {
    fn dimension(&self) -> usize {
        self.angular.dimension
    }

    /// Locate `x`: returns (shell weightings, angle index pair…) —
    /// internally: shell interpolation coefficients and angular
    /// coordinates.
    fn locate(&self, x: &[f64]) -> Result<(usize, f64, f64, [f64; 3])> {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (r_lo, r_hi) = (self.radii[0], *self.radii.last().unwrap());
        if !(r >= r_lo * (1.0 - 1e-12) && r <= r_hi * (1.0 + 1e-12)) {
            return Err(Error::Range(format!(
                "point at |x| = {r} outside the marched range [{r_lo}, {r_hi}]"
            )));
        }
        let ds = (self.radii[1] / self.radii[0]).ln();
        let t = ((r / r_lo).ln() / ds).clamp(0.0, (self.radii.len() - 1) as f64);
        let m = (t.floor() as usize).min(self.radii.len() - 2);
        let frac = t - m as f64;
        let mut w = [0.0; 3];
        for (a, c) in x.iter().enumerate() {
            w[a] = c / r;
        }
        Ok((m, frac, r, w))
    }

    /// Interpolate a per-shell angular array at (shell coordinate,
    /// direction): linear in log r and in the angular coordinates.
    fn interp(&self, data: &[Vec<f64>], m: usize, frac: f64, w: &[f64; 3]) -> f64 {
        let lo = self.interp_shell(&data[m], w);
        let hi = self.interp_shell(&data[m + 1], w);
        lo + frac * (hi - lo)
    }

    fn interp_shell(&self, shell: &[f64], w: &[f64; 3]) -> f64 {
        let ang = &self.angular;
        if ang.dimension == 2 {
            let m = ang.m_theta;
            let theta = w[1].atan2(w[0]).rem_euclid(2.0 * std::f64::consts::PI);
            let t = theta / (2.0 * std::f64::consts::PI) * m as f64;
            let j = (t.floor() as usize) % m;
            let frac = t - t.floor();
            shell[j] * (1.0 - frac) + shell[(j + 1) % m] * frac
        } else {
            let (mt, mp) = (ang.m_theta, ang.m_phi);
            let theta = w[2].clamp(-1.0, 1.0).acos();
            let phi = w[1].atan2(w[0]).rem_euclid(2.0 * std::f64::consts::PI);
            let ti = (theta / std::f64::consts::PI * mt as f64 - 0.5)
                .clamp(0.0, (mt - 1) as f64);
            let (i0, tf) = (ti.floor() as usize, ti - ti.floor());
            let i1 = (i0 + 1).min(mt - 1);
            let tj = phi / (2.0 * std::f64::consts::PI) * mp as f64;
            let (j0, pf) = ((tj.floor() as usize) % mp, tj - tj.floor());
            let j1 = (j0 + 1) % mp;
            let v00 = shell[i0 * mp + j0];
            let v01 = shell[i0 * mp + j1];
            let v10 = shell[i1 * mp + j0];
            let v11 = shell[i1 * mp + j1];
            (v00 * (1.0 - pf) + v01 * pf) * (1.0 - tf) + (v10 * (1.0 - pf) + v11 * pf) * tf
        }
    }

    /// Reconstructed phase K(x) = |x|·g(x).
    pub fn k_at(&self, x: &[f64]) -> Result<f64> {
        let (m, frac, r, w) = self.locate(x)?;
        Ok(r * self.interp(&self.g, m, frac, &w))
    }

    /// Reconstructed gradient via ∂K/∂x_i = ω_i(g + dg/ds) + (∇_ω g)_i.
    pub fn grad_k_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (m, frac, r, w) = self.locate(x)?;
        let _ = r;
        let g = self.interp(&self.g, m, frac, &w);
        let gs = self.interp(&self.dg_ds, m, frac, &w);
        let gt = self.interp(&self.g_theta, m, frac, &w);
        let radial = g + gs;
        if self.dimension() == 2 {
            let tau = [-w[1], w[0]];
            Ok(vec![w[0] * radial + tau[0] * gt, w[1] * radial + tau[1] * gt])
        } else {
            let gp = self.interp(&self.g_phi, m, frac, &w);
            let theta = w[2].clamp(-1.0, 1.0).acos();
            let phi = w[1].atan2(w[0]);
            let (st, ct) = (theta.sin(), theta.cos());
            let (sp, cp) = (phi.sin(), phi.cos());
            let e_t = [ct * cp, ct * sp, -st];
            let e_p = [-sp, cp, 0.0];
            Ok((0..3)
                .map(|a| w[a] * radial + e_t[a] * gt + e_p[a] * gp / st)
                .collect())
        }
    }

    /// Shell index nearest to radius r (for snap-to-sample evaluation).
    fn nearest_shell(&self, r: f64) -> usize {
        let ds = (self.radii[1] / self.radii[0]).ln();
        let t = ((r / self.radii[0]).ln() / ds).round();
        (t.max(0.0) as usize).min(self.radii.len() - 1)
    }

    /// Angle index nearest to direction w.
    fn nearest_angle(&self, w: &[f64; 3]) -> usize {
        let ang = &self.angular;
        if ang.dimension == 2 {
            let m = ang.m_theta;
            let theta = w[1].atan2(w[0]).rem_euclid(2.0 * std::f64::consts::PI);
            ((theta / (2.0 * std::f64::consts::PI) * m as f64).round() as usize) % m
        } else {
            let (mt, mp) = (ang.m_theta, ang.m_phi);
            let theta = w[2].clamp(-1.0, 1.0).acos();
            let phi = w[1].atan2(w[0]).rem_euclid(2.0 * std::f64::consts::PI);
            let i = ((theta / std::f64::consts::PI * mt as f64 - 0.5).round() as isize)
                .clamp(0, mt as isize - 1) as usize;
            let j = ((phi / (2.0 * std::f64::consts::PI) * mp as f64).round() as usize) % mp;
            i * mp + j
        }
    }
}

/// Sup over all shell samples of | |∇K|² − (1+p̃) |, with ∇K from the
/// stored g, dg/ds and the angular-derivative caches.
pub fn eikonal_residual(sol: &EikonalSolution, p_tilde: &FieldExpr) -> Result<f64> {
    let ang = &sol.angular;
    let d = ang.dimension;
    let mut worst: f64 = 0.0;
    for (m, r) in sol.radii.iter().enumerate() {
        let grad_sq = ang.angular_gradient_sq(&sol.g[m]);
        for k in 0..ang.len() {
            let radial = sol.g[m][k] + sol.dg_ds[m][k];
            let w = ang.direction(k);
            let x: Vec<f64> = w[..d].iter().map(|c| c * r).collect();
            let target = 1.0 + p_tilde.eval(&x)?;
            worst = worst.max((radial * radial + grad_sq[k] - target).abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------
// Curvature remainder F_ij
// ---------------------------------------------------------------------

/// F_ij at one sample point.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureEntry {
    /// The sample point actually used (the requested point snapped to
    /// the nearest shell radius and angular node, so that derivatives
    /// come from grid data rather than interpolation).
    pub point: [f64; 3],
    /// F_ij = K·∂²_{ij}K − |∇K|²δ_ij + ∂_iK∂_jK.
    pub f: [[f64; 3]; 3],
}

impl CurvatureEntry {
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for row in &self.f {
            for v in row {
                m = m.max(v.abs());
            }
        }
        m
    }
}

/// F_ij samples with their overall sup norm.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub entries: Vec<CurvatureEntry>,
    pub sup_norm: f64,
}

/// Evaluate F_ij at (the grid sample nearest to) `point`. Needs one
/// shell on each side for the radial second derivative.
pub fn hessian_f(sol: &EikonalSolution, point: &[f64]) -> Result<CurvatureEntry> {
    let r_req = point.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(r_req > 0.0) {
        return Err(Error::Range("curvature point must be away from the origin".into()));
    }
    let m = sol.nearest_shell(r_req);
    if m == 0 || m + 1 >= sol.radii.len() {
        return Err(Error::Range(format!(
            "point at |x| = {r_req} needs two shells inside the marched range for the radial \
             stencil"
        )));
    }
    let mut w = [0.0; 3];
    for (a, c) in point.iter().enumerate() {
        w[a] = c / r_req;
    }
    let k_angle = sol.nearest_angle(&w);
    Ok(curvature_at_sample(sol, m, k_angle))
}

/// F_ij over all interior shells and angles; `entries` holds the
/// per-sample values of the sample set requested via [`hessian_f`]
/// elsewhere — here the report carries only the global sup.
pub fn curvature_sup(sol: &EikonalSolution) -> f64 {
    let mut sup: f64 = 0.0;
    for m in 1..sol.radii.len() - 1 {
        for k in 0..sol.angular.len() {
            sup = sup.max(curvature_at_sample(sol, m, k).max_abs());
        }
    }
    sup
}

/// Assemble a report over explicit points.
pub fn curvature_report(sol: &EikonalSolution, points: &[Vec<f64>]) -> Result<CurvatureReport> {
    let mut entries = Vec::with_capacity(points.len());
    let mut sup: f64 = 0.0;
    for p in points {
        let e = hessian_f(sol, p)?;
        sup = sup.max(e.max_abs());
        entries.push(e);
    }
    Ok(CurvatureReport { entries, sup_norm: sup })
}

/// F_ij at shell m, angle k, from analytic polar/spherical Hessian
/// formulas: angular derivatives are spectral (d=2) or centered (d=3),
/// dg/ds is the exact ODE slope, and d²g/ds² is a centered difference
/// of the stored slopes.
fn curvature_at_sample(sol: &EikonalSolution, m: usize, k: usize) -> CurvatureEntry {
    let ang = &sol.angular;
    let d = ang.dimension;
    let r = sol.radii[m];
    let ds = (sol.radii[1] / sol.radii[0]).ln();
    let g = sol.g[m][k];
    let gs = sol.dg_ds[m][k];
    let gss = (sol.dg_ds[m + 1][k] - sol.dg_ds[m - 1][k]) / (2.0 * ds);
    let w = ang.direction(k);

    let kk = r * g;
    let radial = g + gs; // ∂_r K

    let mut hess = [[0.0; 3]; 3]; // Cartesian Hessian of K
    let mut grad = [0.0; 3];

    if d == 2 {
        let gt = sol.g_theta[m][k];
        let gtt = ang.d_theta_spectral(&sol.g[m], 2)[k];
        let gst = ang.d_theta_spectral(&sol.dg_ds[m], 1)[k];
        let tau = [-w[1], w[0], 0.0];
        // polar Hessian of K = r·g(s,θ):
        //   H = ωωᵀ(g_s+g_ss)/r + (ωτᵀ+τωᵀ)g_sθ/r + ττᵀ(g+g_s+g_θθ)/r
        let h_rr = (gs + gss) / r;
        let h_rt = gst / r;
        let h_tt = (g + gs + gtt) / r;
        for i in 0..2 {
            for j in 0..2 {
                hess[i][j] =
                    h_rr * w[i] * w[j] + h_rt * (w[i] * tau[j] + tau[i] * w[j]) + h_tt * tau[i] * tau[j];
            }
            grad[i] = w[i] * radial + tau[i] * gt;
        }
    } else {
        let (mt, mp) = (ang.m_theta, ang.m_phi);
        let (i, j) = (k / mp, k % mp);
        let dt = std::f64::consts::PI / mt as f64;
        let dp = 2.0 * std::f64::consts::PI / mp as f64;
        let shell = &sol.g[m];
        let s3 = |ii: isize, jj: usize| ang.sample_3d(shell, ii, jj);
        let gt = sol.g_theta[m][k];
        let gp = sol.g_phi[m][k];
        let gtt = (s3(i as isize + 1, j) - 2.0 * shell[k] + s3(i as isize - 1, j)) / (dt * dt);
        let gpp = (shell[i * mp + (j + 1) % mp] - 2.0 * shell[k]
            + shell[i * mp + (j + mp - 1) % mp])
            / (dp * dp);
        let gtp = (s3(i as isize + 1, (j + 1) % mp) - s3(i as isize + 1, (j + mp - 1) % mp)
            - s3(i as isize - 1, (j + 1) % mp)
            + s3(i as isize - 1, (j + mp - 1) % mp))
            / (4.0 * dt * dp);
        // centered differences of the slope field for the mixed terms
        let slopes = &sol.dg_ds[m];
        let gst = (ang.sample_3d(slopes, i as isize + 1, j)
            - ang.sample_3d(slopes, i as isize - 1, j))
            / (2.0 * dt);
        let gsp =
            (slopes[i * mp + (j + 1) % mp] - slopes[i * mp + (j + mp - 1) % mp]) / (2.0 * dp);
        let theta = ang.theta(i);
        let (st, ct) = (theta.sin(), theta.cos());
        let phi = ang.phi(j);
        let (sp, cp) = (phi.sin(), phi.cos());
        let e_t = [ct * cp, ct * sp, -st];
        let e_p = [-sp, cp, 0.0];
        // spherical-frame Hessian components of K = r·g(s,θ,φ)
        let h_rr = (gs + gss) / r;
        let h_rt = gst / r;
        let h_rp = gsp / (r * st);
        let h_tt = (g + gs + gtt) / r;
        let h_tp = (gtp - (ct / st) * gp) / (r * st);
        let h_pp = (gpp / (st * st) + g + gs + (ct / st) * gt) / r;
        let frame = [w, e_t, e_p];
        let comps = [[h_rr, h_rt, h_rp], [h_rt, h_tt, h_tp], [h_rp, h_tp, h_pp]];
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        acc += comps[p][q] * frame[p][a] * frame[q][b];
                    }
                }
                hess[a][b] = acc;
            }
            grad[a] = w[a] * radial + e_t[a] * gt + e_p[a] * gp / st;
        }
    }

    let grad_sq: f64 = grad.iter().map(|v| v * v).sum();
    let mut f = [[0.0; 3]; 3];
    for a in 0..d {
        for b in 0..d {
            f[a][b] = kk * hess[a][b] + grad[a] * grad[b];
            if a == b {
                f[a][b] -= grad_sq;
            }
        }
    }
    let mut point = [0.0; 3];
    for a in 0..d {
        point[a] = r * w[a];
    }
    CurvatureEntry { point, f }
}

/// Check the angular limit: sup over the outer shell of
/// |g∞² + |∇_ω g∞|² − n∞(ω)| with n∞ on the 1+p̃∞ scale. Errors when
/// the outer shell has not reached a steady state.
pub fn g_infinity_check(sol: &EikonalSolution, n_inf: &FieldExpr) -> Result<f64> {
    let outer = sol.radii.len() - 1;
    let steady = sol.dg_ds[outer].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if steady >= STEADY_TOL {
        return Err(Error::Precondition(format!(
            "outer shell not steady (sup|dg/ds| = {steady:.3e} >= {STEADY_TOL:.0e}); march further"
        )));
    }
    let ang = &sol.angular;
    let grad_sq = ang.angular_gradient_sq(&sol.g[outer]);
    let mut worst: f64 = 0.0;
    for k in 0..ang.len() {
        let w = ang.direction(k);
        let target = n_inf.eval(&w[..ang.dimension])?;
        let g = sol.g[outer][k];
        worst = worst.max((g * g + grad_sq[k] - target).abs());
    }
    Ok(worst)
}
