//! Numerical laboratory for the electromagnetic Helmholtz equation
//!
//! ```text
//!     (∇ + ib(x))²u + λ(1 + p̃(x))u + Q(x)u + iεu = f        on ℝᵈ, d ∈ {2, 3}
//! ```
//!
//! with a variable index of refraction `n(x) = λ(1 + p̃(x))`, a magnetic
//! potential `b`, an electric potential `Q`, and the limiting-absorption
//! regularization `+iεu`, ε > 0.
//!
//! The crate is organized around the workflow of studying the limiting
//! absorption principle and the outgoing radiation behaviour of `u` as
//! ε ↓ 0:
//!
//! * [`model`] — scalar field expressions, scenario configuration
//!   (coefficients, source, parameters), and magnetic-field data `B = db`.
//! * [`grid`] — uniform staggered grids on boxes `[-L, L]ᵈ`, discrete
//!   fields, the gauge-covariant (Peierls) discretization of the operator,
//!   and the magnetic gradient `∇_b u = ∇u + ibu` with its
//!   radial/tangential splitting.
//! * [`solver`] — a complex-shifted-Laplacian preconditioned GMRES solver
//!   for a fixed ε, and the ε-sweep driver that tracks the
//!   limiting-absorption quantities along a decreasing sequence of ε.
//! * [`eikonal`] — outward marching of the angular profile `g = K/|x|` of
//!   a phase `K` solving `|∇K|² = 1 + p̃`, plus the closed-form profile
//!   for the rotated-metric example and curvature diagnostics `F_ij`.
//! * [`functionals`] — weighted norms (Morrey–Campanato style `|||·|||` and
//!   its dual), radiation functionals for several choices of outgoing
//!   phase, tangential energy, the energy-concentration functional, and
//!   hypothesis indicators (β, Γ, C*, decay exponents).
//! * [`identities`] — multiplier identities (symmetric, real, imaginary)
//!   and a-priori bounds evaluated on discrete fields, with a catalog of
//!   multiplier weights (ψ, φ) and per-term accounting.
//!
//! Everything is deterministic: reductions use a fixed chunked order, so
//! results are bit-identical across runs and thread counts (see [`par`]).

pub mod error;
pub mod par;

pub mod model;

pub mod grid;

pub mod functionals;
pub mod solver;

pub mod eikonal;

pub mod identities;

pub use error::{Error, Result};

/// Complex scalar used throughout (`f64` re/im parts).
pub type C64 = num_complex::Complex64;

/// Quintic smoothstep `S₅` on `[0, 1]`: the unique quintic with
/// `S₅(0) = 0`, `S₅(1) = 1` and vanishing first and second derivatives at
/// both ends. Arguments are clamped, so `S₅ ≡ 0` for `t ≤ 0` and `S₅ ≡ 1`
/// for `t ≥ 1`; the clamped extension is C² on all of ℝ.
#[inline]
pub fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// First derivative of the clamped quintic smoothstep.
#[inline]
pub fn smoothstep5_d1(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t
}

/// Second derivative of the clamped quintic smoothstep.
#[inline]
pub fn smoothstep5_d2(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    60.0 * t - 180.0 * t * t + 120.0 * t * t * t
}
