//! Built-in scenario catalog.
//!
//! Each preset is an ordinary configuration document (see
//! [`crate::model::scenario`]), so `preset_text` also serves as living
//! documentation of the config format. The catalog:
//!
//! * `free` — d=3 free space, n ≡ 1, Gaussian source.
//! * `saito` — d=2 rotated-metric example p̃ = −x₁/(λ|x|) (λ = 2),
//!   tapered to zero inside the unit ball so the origin stays regular;
//!   for |x| ≥ 1 the potential is exactly −x₁/(λ|x|) and the eikonal
//!   equation has the closed-form phase K = a(λ)|x| − b(λ)x₁.
//! * `angular-index` — d=2 long-range angular index n = 2 + 0.5ω₁ with a
//!   small azimuthal magnetic potential: the energy-concentration
//!   showcase (critical directions ±e₁).
//! * `azimuthal-b` — d=2 free index with the azimuthal magnetic
//!   potential alone.
//! * `coulomb-q` — d=3 free index with an attractive Coulomb-type
//!   electric potential Q = 0.5/|x|.
//!
//! Sources are unit-mass Gaussians `(2π)^{-d/2} e^{-r²/2}`. All presets
//! enable the absorbing collar sized for their index scale; the sweep
//! and grid defaults are tuned so each preset runs at desk scale.

use crate::error::{Error, Result};
use crate::model::scenario::RunConfig;

/// Names understood by [`preset`] / [`preset_text`].
pub const PRESET_NAMES: &[&str] =
    &["free", "saito", "angular-index", "azimuthal-b", "coulomb-q"];

/// Quintic taper S₅(clip(t, 0, 1)) written in the expression language:
/// `clip(t,0,1) = (abs(t) − abs(t−1) + 1)/2`, then the quintic
/// smoothstep polynomial t³(10 − 15t + 6t²).
fn smoothstep_expr(t: &str) -> String {
    let c = format!("((abs({t}) - abs({t} - 1) + 1) / 2)");
    format!("({c}^3 * (10 - 15*{c} + 6*{c}^2))")
}

const GAUSS_2D: &str = "0.15915494309189535 * exp(-r^2/2)"; // (2π)^{-1}
const GAUSS_3D: &str = "0.06349363593424097 * exp(-r^2/2)"; // (2π)^{-3/2}

/// Configuration text of a named preset. `lambda` overrides the preset's
/// spectral parameter; for `saito` the potential itself depends on λ and
/// is regenerated accordingly.
pub fn preset_text(name: &str, lambda: Option<f64>) -> Result<String> {
    let text = match name {
        "free" => {
            let lambda = lambda.unwrap_or(1.0);
            format!(
                "[scenario]\n\
                 dimension = 3\n\
                 lambda = {lambda}\n\
                 epsilon = 0.01\n\
                 [fields]\n\
                 n = \"1\"\n\
                 n_inf = \"1\"\n\
                 f_re = \"{GAUSS_3D}\"\n\
                 [solver]\n\
                 half_width = 16\n\
                 points = 129\n\
                 collar_strength = 1.25\n"
            )
        }
        "saito" => {
            let lambda = lambda.unwrap_or(2.0);
            if !(lambda > 1.0) {
                return Err(Error::config(format!(
                    "saito preset requires lambda > 1, got {lambda}"
                )));
            }
            let taper = smoothstep_expr("r");
            let collar = 1.25 * (lambda).sqrt();
            format!(
                "[scenario]\n\
                 dimension = 2\n\
                 lambda = {lambda}\n\
                 epsilon = 0.01\n\
                 [fields]\n\
                 p_tilde = \"-x1/({lambda}*r) * {taper}\"\n\
                 n_inf = \"{lambda} * (1 - w1/{lambda})\"\n\
                 f_re = \"{GAUSS_2D}\"\n\
                 [solver]\n\
                 half_width = 16\n\
                 points = 257\n\
                 collar_strength = {collar}\n\
                 [eikonal]\n\
                 r0 = 1\n\
                 r_max = 1000\n\
                 rho = 1.05\n\
                 angles = 64\n"
            )
        }
        "angular-index" => {
            let lambda = lambda.unwrap_or(1.0);
            format!(
                "[scenario]\n\
                 dimension = 2\n\
                 lambda = {lambda}\n\
                 epsilon = 0.25\n\
                 [fields]\n\
                 n = \"2 + 0.5*w1\"\n\
                 n_inf = \"2 + 0.5*w1\"\n\
                 b = \"-0.15*x2/(1+r^2)\", \"0.15*x1/(1+r^2)\"\n\
                 f_re = \"{GAUSS_2D}\"\n\
                 [solver]\n\
                 half_width = 16\n\
                 points = 257\n\
                 collar_strength = 1.9764235376052373\n"
            )
        }
        "azimuthal-b" => {
            let lambda = lambda.unwrap_or(1.0);
            format!(
                "[scenario]\n\
                 dimension = 2\n\
                 lambda = {lambda}\n\
                 epsilon = 0.01\n\
                 [fields]\n\
                 n = \"1\"\n\
                 n_inf = \"1\"\n\
                 b = \"-0.15*x2/(1+r^2)\", \"0.15*x1/(1+r^2)\"\n\
                 f_re = \"{GAUSS_2D}\"\n\
                 [solver]\n\
                 half_width = 16\n\
                 points = 257\n\
                 collar_strength = 1.25\n"
            )
        }
        "coulomb-q" => {
            let lambda = lambda.unwrap_or(1.0);
            format!(
                "[scenario]\n\
                 dimension = 3\n\
                 lambda = {lambda}\n\
                 epsilon = 0.01\n\
                 [fields]\n\
                 n = \"1\"\n\
                 n_inf = \"1\"\n\
                 q = \"0.5/r\"\n\
                 f_re = \"{GAUSS_3D}\"\n\
                 [solver]\n\
                 half_width = 16\n\
                 points = 129\n\
                 collar_strength = 1.25\n"
            )
        }
        _ => {
            return Err(Error::config(format!(
                "unknown preset `{name}` (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(text)
}

/// Parse a named preset into a run configuration.
pub fn preset(name: &str) -> Result<RunConfig> {
    RunConfig::parse(&preset_text(name, None)?)
}

/// Preset with an overridden λ.
pub fn preset_with_lambda(name: &str, lambda: f64) -> Result<RunConfig> {
    RunConfig::parse(&preset_text(name, Some(lambda))?)
}
