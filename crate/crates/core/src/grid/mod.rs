//! Structured box grids and discrete magnetic differential operators.
//!
//! The grid covers a box of half-width `L` with `N` nodes per axis at
//! spacing `h = 2L/(N−1)`, staggered by half a cell:
//!
//! ```text
//!     x_i = −L + (i + ½)h,    i = 0 … N−1.
//! ```
//!
//! With odd `N` (required) no node coordinate vanishes, so every node has
//! `|x| ≥ h/2` and fields with a singularity at the origin (`1/r`,
//! `ω_k`) are evaluable at all nodes.
//!
//! The Helmholtz operator `(∇+ib)²u + λ(1+p̃)u + Qu + iε(x)u` is
//! discretized in gauge-covariant (Peierls) form: the hopping term along
//! axis `a` carries the link phase of the magnetic potential at the edge
//! midpoint,
//!
//! ```text
//!     w_a(m) = exp(i·h·b_a(x_m + (h/2)e_a)),
//!     ((∇+ib)²u)_m ≈ Σ_a [w_a(m)u_{m+e_a} − 2u_m + w̄_a(m−e_a)u_{m−e_a}]/h²,
//! ```
//!
//! which is second-order accurate, reduces to the standard 2d+1-point
//! stencil for `b = 0`, and keeps the operator's real part Hermitian —
//! the discrete analogue of the symmetry that drives the energy
//! identities.

pub mod io;

use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::{par, C64};

/// Hard cap on the node count (memory guard): 2²⁷ ≈ 1.3e8 nodes is about
/// 2 GiB per complex field.
pub const MAX_NODES: usize = 1 << 27;

/// Uniform staggered grid on `[−L, L]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Spatial dimension d ∈ {2, 3}.
    pub dimension: usize,
    /// Box half-width L.
    pub half_width: f64,
    /// Nodes per axis N (odd, ≥ 17).
    pub points: usize,
    /// Spacing h = 2L/(N−1).
    pub h: f64,
}

/// Build a grid, validating dimension, size and the memory budget.
pub fn build_grid(dimension: usize, half_width: f64, points: usize) -> Result<Grid> {
    if !matches!(dimension, 2 | 3) {
        return Err(Error::config(format!("dimension must be 2 or 3, got {dimension}")));
    }
    if !(half_width > 0.0) {
        return Err(Error::config(format!("half_width must be positive, got {half_width}")));
    }
    if points < 16 {
        return Err(Error::config(format!("points must be at least 16, got {points}")));
    }
    if points % 2 == 0 {
        // with even N the half-cell stagger lands a node exactly on the
        // origin, defeating its purpose
        return Err(Error::config(format!("points must be odd, got {points}")));
    }
    let count = points.checked_pow(dimension as u32).filter(|&c| c <= MAX_NODES);
    if count.is_none() {
        return Err(Error::Resource(format!(
            "grid {points}^{dimension} exceeds the node cap {MAX_NODES}"
        )));
    }
    let h = 2.0 * half_width / (points as f64 - 1.0);
    Ok(Grid { dimension, half_width, points, h })
}

impl Grid {
    /// Total node count N^d.
    pub fn node_count(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    /// Coordinate of 1-D index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h
    }

    /// Linear-index stride of axis `a`.
    #[inline]
    pub fn stride(&self, a: usize) -> usize {
        self.points.pow((self.dimension - 1 - a) as u32)
    }

    /// Decode a linear index into per-axis indices (row-major, last axis
    /// fastest). Only the leading `dimension` entries are meaningful.
    #[inline]
    pub fn decode(&self, m: usize) -> [usize; 3] {
        let n = self.points;
        let mut idx = [0usize; 3];
        match self.dimension {
            2 => {
                idx[0] = m / n;
                idx[1] = m % n;
            }
            _ => {
                idx[0] = m / (n * n);
                idx[1] = (m / n) % n;
                idx[2] = m % n;
            }
        }
        idx
    }

    /// Encode per-axis indices into a linear index.
    #[inline]
    pub fn encode(&self, idx: [usize; 3]) -> usize {
        let n = self.points;
        match self.dimension {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Point coordinates of a linear index; entries past `dimension` are
    /// zero so the slice `&point(m)[..dimension]` is the actual point.
    #[inline]
    pub fn point(&self, m: usize) -> [f64; 3] {
        let idx = self.decode(m);
        let mut x = [0.0; 3];
        for a in 0..self.dimension {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    /// Euclidean radius of node `m`.
    #[inline]
    pub fn radius(&self, m: usize) -> f64 {
        let x = self.point(m);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// `true` when any index component lies on the outermost layer.
    #[inline]
    pub fn is_boundary(&self, m: usize) -> bool {
        let idx = self.decode(m);
        (0..self.dimension).any(|a| idx[a] == 0 || idx[a] == self.points - 1)
    }

    /// Quadrature weight of the midpoint rule, h^d.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dimension as i32)
    }

    /// `true` when the grid resolves the wavelength 2π/√λ with the
    /// recommended ≥ ~30 nodes (h√λ ≤ 0.2); a `false` is a warning sign,
    /// not an error.
    pub fn resolves_wavelength(&self, lambda: f64) -> bool {
        self.h * lambda.sqrt() <= 0.2 + 1e-12
    }
}

/// A complex scalar field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    /// One value per node, row-major (last axis fastest).
    pub values: Vec<C64>,
}

impl WaveField {
    /// The zero field.
    pub fn zeros(grid: Grid) -> WaveField {
        WaveField { grid, values: vec![C64::new(0.0, 0.0); grid.node_count()] }
    }

    /// Sample `f(x)` at every node (parallel, deterministic); errors from
    /// any node propagate.
    pub fn sample<F>(grid: Grid, f: F) -> Result<WaveField>
    where
        F: Fn(&[f64]) -> Result<C64> + Sync,
    {
        let values = try_fill(grid.node_count(), |m| {
            let x = grid.point(m);
            f(&x[..grid.dimension])
        })?;
        Ok(WaveField { grid, values })
    }

    /// Sample the scenario's source f.
    pub fn sample_source(grid: Grid, scenario: &Scenario) -> Result<WaveField> {
        WaveField::sample(grid, |x| scenario.f_at(x))
    }

    /// Discrete L² norm `(h^d Σ|v|²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        let v = &self.values;
        (self.grid.cell_volume() * par::sum_f64(v.len(), |m| v[m].norm_sqr())).sqrt()
    }

    /// Verify all entries are finite.
    pub fn check_finite(&self) -> Result<()> {
        for (m, v) in self.values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Precondition(format!(
                    "field has a non-finite value at node {m}"
                )));
            }
        }
        Ok(())
    }
}

/// The magnetic gradient ∇_b u = ∇u + ibu, one complex vector per node.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub grid: Grid,
    /// `components[a][m]`: axis-a component at node m. Defined on
    /// interior nodes (one-cell margin); zero on the boundary ring.
    pub components: Vec<Vec<C64>>,
}

impl GradientField {
    /// Squared pointwise magnitude Σ_a |g_a(m)|².
    #[inline]
    pub fn norm_sqr_at(&self, m: usize) -> f64 {
        self.components.iter().map(|c| c[m].norm_sqr()).sum()
    }
}

/// Deterministic parallel fill with error propagation.
fn try_fill<F>(n: usize, f: F) -> Result<Vec<C64>>
where
    F: Fn(usize) -> Result<C64> + Sync,
{
    use std::sync::Mutex;
    let first_err: Mutex<Option<Error>> = Mutex::new(None);
    let mut values = vec![C64::new(0.0, 0.0); n];
    par::fill_c64(&mut values, |m| match f(m) {
        Ok(v) => v,
        Err(e) => {
            let mut slot = first_err.lock().unwrap();
            // keep the lowest-index error for determinism of messages
            if slot.is_none() {
                *slot = Some(e);
            }
            C64::new(f64::NAN, f64::NAN)
        }
    });
    match first_err.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(values),
    }
}

// ---------------------------------------------------------------------
// Helmholtz operator in Peierls form
// ---------------------------------------------------------------------

/// Sampled discrete operator: diagonal plus link phases. Assembled once,
/// applied many times by the Krylov solver.
pub struct HelmholtzOperator {
    pub grid: Grid,
    /// −2d/h² + λ(1+p̃) + Q + iε(x) at every node.
    diag: Vec<C64>,
    /// Per axis: link phase on the edge from node m to its +e_a
    /// neighbour; empty when b ≡ 0 (all phases 1).
    links: Vec<Vec<C64>>,
}

impl HelmholtzOperator {
    /// Sample coefficients and link phases. The dissipation uses the
    /// scenario's position-dependent ε (collar included when configured).
    pub fn assemble(grid: Grid, scenario: &Scenario) -> Result<HelmholtzOperator> {
        if scenario.dimension != grid.dimension {
            return Err(Error::Precondition(format!(
                "scenario dimension {} vs grid dimension {}",
                scenario.dimension, grid.dimension
            )));
        }
        let n_nodes = grid.node_count();
        let d = grid.dimension;
        let l = grid.half_width;
        let base = -2.0 * d as f64 / (grid.h * grid.h);
        let diag = try_fill(n_nodes, |m| {
            let xb = grid.point(m);
            let x = &xb[..d];
            Ok(C64::new(
                base + scenario.n_at(x)? + scenario.q_at(x)?,
                scenario.epsilon_at(x, l),
            ))
        })?;
        let mut links = Vec::new();
        if !scenario.b_is_zero() {
            for a in 0..d {
                let link = try_fill(n_nodes, |m| {
                    let mut x = grid.point(m);
                    x[a] += 0.5 * grid.h;
                    let phase = grid.h * scenario.b_at(a, &x[..d])?;
                    Ok(C64::new(phase.cos(), phase.sin()))
                })?;
                links.push(link);
            }
        }
        Ok(HelmholtzOperator { grid, diag, links })
    }

    /// Pointwise diagonal of the operator.
    pub fn diagonal(&self) -> &[C64] {
        &self.diag
    }

    /// Apply to a full-grid vector. Interior nodes receive the stencil
    /// value (using `u` as given, including its boundary-ring entries);
    /// boundary-ring outputs are zero. The solver keeps ring entries of
    /// its iterates at zero, which realizes the homogeneous Dirichlet
    /// condition.
    pub fn apply(&self, u: &[C64], out: &mut [C64]) {
        let grid = self.grid;
        let inv_h2 = 1.0 / (grid.h * grid.h);
        let d = grid.dimension;
        let n = grid.points;
        let diag = &self.diag;
        let links = &self.links;
        assert_eq!(u.len(), grid.node_count());
        assert_eq!(out.len(), grid.node_count());

        par::fill_c64(out, |m| {
            let idx = grid.decode(m);
            if (0..d).any(|a| idx[a] == 0 || idx[a] == n - 1) {
                return C64::new(0.0, 0.0);
            }
            let mut acc = diag[m] * u[m];
            for a in 0..d {
                let s = grid.stride(a);
                let hop = if links.is_empty() {
                    u[m + s] + u[m - s]
                } else {
                    links[a][m] * u[m + s] + links[a][m - s].conj() * u[m - s]
                };
                acc += hop * inv_h2;
            }
            acc
        });
    }
}

/// Apply the Helmholtz operator of a scenario to a field (one-shot
/// convenience around [`HelmholtzOperator`]).
pub fn apply_helmholtz_operator(
    grid: Grid,
    scenario: &Scenario,
    u: &WaveField,
) -> Result<WaveField> {
    if u.grid != grid {
        return Err(Error::Precondition("field grid does not match".into()));
    }
    let op = HelmholtzOperator::assemble(grid, scenario)?;
    let mut out = WaveField::zeros(grid);
    op.apply(&u.values, &mut out.values);
    Ok(out)
}

/// Magnetic gradient ∇_b u = ∇u + ibu by centered differences on
/// interior nodes (zero on the boundary ring).
pub fn magnetic_gradient(grid: Grid, scenario: &Scenario, u: &WaveField) -> Result<GradientField> {
    if u.grid != grid {
        return Err(Error::Precondition("field grid does not match".into()));
    }
    let d = grid.dimension;
    let n = grid.points;
    let inv_2h = 0.5 / grid.h;
    let uv = &u.values;
    let mut components = Vec::new();
    for a in 0..d {
        let s = grid.stride(a);
        let b_expr = (!scenario.b_is_zero()).then_some(());
        let comp = try_fill(grid.node_count(), |m| {
            let idx = grid.decode(m);
            if (0..d).any(|ax| idx[ax] == 0 || idx[ax] == n - 1) {
                return Ok(C64::new(0.0, 0.0));
            }
            let mut g = (uv[m + s] - uv[m - s]) * inv_2h;
            if b_expr.is_some() {
                let x = grid.point(m);
                g += C64::i() * scenario.b_at(a, &x[..d])? * uv[m];
            }
            Ok(g)
        })?;
        components.push(comp);
    }
    Ok(GradientField { grid, components })
}

/// Split a gradient into its radial part `(ω·g)` and tangential part
/// `g − (ω·g)ω`. The radial scalar is returned per node; the tangential
/// part keeps the vector layout.
pub fn radial_tangential_split(g: &GradientField) -> (Vec<C64>, GradientField) {
    let grid = g.grid;
    let d = grid.dimension;
    let n_nodes = grid.node_count();
    let mut radial = vec![C64::new(0.0, 0.0); n_nodes];
    par::fill_c64(&mut radial, |m| {
        let x = grid.point(m);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            acc += g.components[a][m] * (x[a] / r);
        }
        acc
    });
    let mut tangential = Vec::new();
    for a in 0..d {
        let mut comp = vec![C64::new(0.0, 0.0); n_nodes];
        par::fill_c64(&mut comp, |m| {
            let x = grid.point(m);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            g.components[a][m] - radial[m] * (x[a] / r)
        });
        tangential.push(comp);
    }
    (radial, GradientField { grid, components: tangential })
}
