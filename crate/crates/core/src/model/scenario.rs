//! Scenario configuration: the coefficients and parameters of one
//! Helmholtz problem, plus the plain-text config format they live in.
//!
//! # Config format
//!
//! A configuration document has up to four sections:
//!
//! ```text
//! [scenario]
//! dimension = 2
//! lambda    = 2.0
//! epsilon   = 0.01
//!
//! [fields]
//! p_tilde = "-x1/(2*r)"
//! b       = "-0.15*x2/(1+r^2)", "0.15*x1/(1+r^2)"
//! f_re    = "0.15915494309189535*exp(-r^2/2)"
//!
//! [solver]
//! half_width = 16
//! points     = 257
//!
//! [eikonal]
//! rho = 1.05
//! ```
//!
//! `key = value` lines; `#` starts a comment; field expressions are
//! double-quoted strings; vector-valued keys take a comma list. Unknown
//! sections or keys are errors (typos should not silently change the
//! physics).

use crate::error::{Error, Result};
use crate::model::expr::FieldExpr;
use crate::C64;

/// Smoothly switched-on absorbing collar near the box boundary.
///
/// When active, the dissipation coefficient becomes position dependent:
///
/// ```text
///     ε(x) = ε + strength · S₅( (‖x‖∞ − start·L) / ((1 − start)·L) )
/// ```
///
/// so the bulk `‖x‖∞ ≤ start·L` sees exactly the scenario ε while waves
/// entering the collar are damped before they can reflect off the
/// Dirichlet wall. This is an artifact of computing on a finite box — the
/// continuum problem is posed on ℝᵈ with outgoing behaviour at infinity —
/// and all report quantities are evaluated well inside the collar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collar {
    /// Peak added dissipation ε_c (reached at the box wall).
    pub strength: f64,
    /// Onset as a fraction of the half-width L (default 0.5625).
    pub start: f64,
}

impl Collar {
    pub const DEFAULT_START: f64 = 0.5625;
}

/// One fully specified Helmholtz problem
/// `(∇+ib)²u + λ(1+p̃)u + Qu + iεu = f`.
///
/// The index of refraction may be given either as `n(x)` directly or as
/// `(λ, p̃(x))`; the two are related by `n = λ(1+p̃)` and both views are
/// exposed ([`Scenario::n_at`], [`Scenario::p_tilde_at`]).
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Spatial dimension d ∈ {2, 3}.
    pub dimension: usize,
    /// Spectral parameter λ > 0.
    pub lambda: f64,
    /// Limiting-absorption parameter ε ≥ 0 (the solver requires ε > 0).
    pub epsilon: f64,
    /// Radiation-weight exponent δ ∈ (0, 1].
    pub delta: f64,
    /// Expected decay exponent μ of B and Q (hypothesis checking only).
    pub mu: f64,
    /// Claimed bound for the long-range amplitude Γ, if any.
    pub gamma_bound: Option<f64>,
    /// Claimed bound for the symbol constant C*, if any.
    pub c_star: Option<f64>,
    /// Inner radius r₀ ≥ 1 of the eikonal region.
    pub r0: f64,
    /// Norm offset R₀ ≥ 0 used by the weighted norms.
    pub big_r0: f64,
    /// Index of refraction n(x), if configured directly.
    pub n: Option<FieldExpr>,
    /// Relative perturbation p̃(x), if configured.
    pub p_tilde: Option<FieldExpr>,
    /// Electric potential Q(x).
    pub q_pot: FieldExpr,
    /// Magnetic potential components b_k(x); empty means b ≡ 0.
    pub b: Vec<FieldExpr>,
    /// Source f, real part.
    pub source_re: FieldExpr,
    /// Source f, imaginary part.
    pub source_im: FieldExpr,
    /// Angular limit n∞(ω) of the index, if known.
    pub n_inf: Option<FieldExpr>,
    /// Optional absorbing collar (off unless configured).
    pub collar: Option<Collar>,
}

impl Scenario {
    /// Index of refraction n(x) = λ(1 + p̃(x)).
    pub fn n_at(&self, x: &[f64]) -> Result<f64> {
        match (&self.n, &self.p_tilde) {
            (Some(n), _) => n.eval(x),
            (None, Some(p)) => Ok(self.lambda * (1.0 + p.eval(x)?)),
            (None, None) => Ok(self.lambda),
        }
    }

    /// Relative perturbation p̃(x) = n(x)/λ − 1.
    pub fn p_tilde_at(&self, x: &[f64]) -> Result<f64> {
        match (&self.p_tilde, &self.n) {
            (Some(p), _) => p.eval(x),
            (None, Some(n)) => Ok(n.eval(x)? / self.lambda - 1.0),
            (None, None) => Ok(0.0),
        }
    }

    /// Electric potential Q(x).
    pub fn q_at(&self, x: &[f64]) -> Result<f64> {
        self.q_pot.eval(x)
    }

    /// Magnetic potential component b_k(x) (0-based k).
    pub fn b_at(&self, k: usize, x: &[f64]) -> Result<f64> {
        match self.b.get(k) {
            Some(e) => e.eval(x),
            None => Ok(0.0),
        }
    }

    /// `true` when the magnetic potential is identically zero.
    pub fn b_is_zero(&self) -> bool {
        self.b.iter().all(|e| e.as_constant() == Some(0.0)) || self.b.is_empty()
    }

    /// Source value f(x).
    pub fn f_at(&self, x: &[f64]) -> Result<C64> {
        Ok(C64::new(self.source_re.eval(x)?, self.source_im.eval(x)?))
    }

    /// Position-dependent dissipation ε(x) on a box of half-width `l`
    /// (the scenario ε plus the collar profile, if one is configured).
    pub fn epsilon_at(&self, x: &[f64], l: f64) -> f64 {
        let mut eps = self.epsilon;
        if let Some(c) = self.collar {
            let xinf = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let onset = c.start * l;
            let width = (1.0 - c.start) * l;
            eps += c.strength * crate::smoothstep5((xinf - onset) / width);
        }
        eps
    }

    /// Validate parameter ranges and the n ↔ λ(1+p̃) consistency.
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dimension, 2 | 3) {
            return Err(Error::config(format!(
                "dimension must be 2 or 3, got {}",
                self.dimension
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.r0 >= 1.0) {
            return Err(Error::config(format!("r0 must be at least 1, got {}", self.r0)));
        }
        if !(self.big_r0 >= 0.0) {
            return Err(Error::config(format!(
                "big_r0 must be non-negative, got {}",
                self.big_r0
            )));
        }
        if !self.b.is_empty() && self.b.len() != self.dimension {
            return Err(Error::config(format!(
                "b must have {} components, got {}",
                self.dimension,
                self.b.len()
            )));
        }
        for e in self
            .n
            .iter()
            .chain(self.p_tilde.iter())
            .chain(std::iter::once(&self.q_pot))
            .chain(self.b.iter())
            .chain([&self.source_re, &self.source_im])
            .chain(self.n_inf.iter())
        {
            if e.max_axis() > self.dimension {
                return Err(Error::config(format!(
                    "expression `{e}` references component {} in dimension {}",
                    e.max_axis(),
                    self.dimension
                )));
            }
        }
        if let Some(c) = self.collar {
            if !(c.strength >= 0.0) || !(c.start > 0.0 && c.start < 1.0) {
                return Err(Error::config(
                    "collar requires strength ≥ 0 and 0 < start < 1",
                ));
            }
        }
        // When both parameterizations are present they must agree.
        if self.n.is_some() && self.p_tilde.is_some() {
            for x in consistency_points(self.dimension) {
                let n = self.n.as_ref().unwrap().eval(&x)?;
                let viap = self.lambda * (1.0 + self.p_tilde.as_ref().unwrap().eval(&x)?);
                let scale = 1.0_f64.max(n.abs()).max(viap.abs());
                if (n - viap).abs() > 1e-12 * scale {
                    return Err(Error::config(format!(
                        "n and λ(1+p̃) disagree at {x:?}: {n} vs {viap}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Fixed point set used for cross-validating n against λ(1+p̃): a few
/// radii along axis, diagonal and generic directions, origin excluded.
fn consistency_points(d: usize) -> Vec<Vec<f64>> {
    let dirs: &[[f64; 3]] = &[
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.6, -0.8, 0.0],
        [0.48, 0.6, 0.64],
        [-0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2],
    ];
    let mut pts = Vec::new();
    for rad in [0.35, 1.0, 2.5, 7.0] {
        for dir in dirs {
            let p: Vec<f64> = dir[..d].iter().map(|c| c * rad).collect();
            if p.iter().map(|c| c * c).sum::<f64>() > 0.0 {
                pts.push(p);
            }
        }
    }
    pts
}

// ---------------------------------------------------------------------
// Raw config document
// ---------------------------------------------------------------------

/// A raw `key = value` entry with its source line (for error messages).
#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

/// Parsed but untyped configuration document.
#[derive(Debug, Clone, Default)]
pub struct ConfigDoc {
    sections: Vec<(String, Vec<Entry>)>,
}

impl ConfigDoc {
    /// Parse the section/key/value skeleton of a document.
    pub fn parse(text: &str) -> Result<ConfigDoc> {
        let mut doc = ConfigDoc::default();
        let mut current: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::config(format!(
                        "line {}: malformed section header `{line}`",
                        lineno + 1
                    )));
                };
                let name = name.trim().to_string();
                if doc.sections.iter().any(|(s, _)| *s == name) {
                    return Err(Error::config(format!(
                        "line {}: duplicate section [{name}]",
                        lineno + 1
                    )));
                }
                doc.sections.push((name, Vec::new()));
                current = Some(doc.sections.len() - 1);
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::config(format!("line {}: empty key or value", lineno + 1)));
            }
            let Some(sec) = current else {
                return Err(Error::config(format!(
                    "line {}: `{key}` appears before any [section]",
                    lineno + 1
                )));
            };
            if doc.sections[sec].1.iter().any(|e| e.key == key) {
                return Err(Error::config(format!(
                    "line {}: duplicate key `{key}` in [{}]",
                    lineno + 1,
                    doc.sections[sec].0
                )));
            }
            doc.sections[sec].1.push(Entry { key, value, line: lineno + 1 });
        }
        Ok(doc)
    }

    fn section(&self, name: &str) -> Option<&Vec<Entry>> {
        self.sections.iter().find(|(s, _)| s == name).map(|(_, e)| e)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.section(section).and_then(|es| es.iter().find(|e| e.key == key))
    }

    /// Error on unknown section names or unknown keys within a section.
    fn check_known(&self, known: &[(&str, &[&str])]) -> Result<()> {
        for (name, entries) in &self.sections {
            let Some((_, keys)) = known.iter().find(|(s, _)| s == name) else {
                return Err(Error::config(format!("unknown section [{name}]")));
            };
            for e in entries {
                if !keys.contains(&e.key.as_str()) {
                    return Err(Error::config(format!(
                        "line {}: unknown key `{}` in [{name}]",
                        e.line, e.key
                    )));
                }
            }
        }
        Ok(())
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad_value(e, "a number")),
        }
    }

    fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| bad_value(e, "a non-negative integer")),
        }
    }

    fn bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "on" => Ok(Some(true)),
                "false" | "no" | "off" => Ok(Some(false)),
                _ => Err(bad_value(e, "a boolean (true/false)")),
            },
        }
    }

    fn string(&self, section: &str, key: &str) -> Result<Option<String>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => Ok(Some(unquote(&e.value).unwrap_or(e.value.clone()))),
        }
    }

    fn expr(&self, section: &str, key: &str) -> Result<Option<FieldExpr>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => {
                let src = unquote(&e.value)
                    .ok_or_else(|| bad_value(e, "a quoted expression string"))?;
                FieldExpr::parse(&src).map(Some).map_err(|err| {
                    Error::config(format!("line {}: key `{}`: {err}", e.line, e.key))
                })
            }
        }
    }

    fn expr_list(&self, section: &str, key: &str) -> Result<Option<Vec<FieldExpr>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => {
                let mut items = Vec::new();
                for part in split_top_level(&e.value) {
                    let part = part.trim();
                    let src = match unquote(part) {
                        Some(s) => s,
                        None => part.to_string(), // allow bare numbers in lists
                    };
                    let expr = FieldExpr::parse(&src).map_err(|err| {
                        Error::config(format!("line {}: key `{}`: {err}", e.line, e.key))
                    })?;
                    items.push(expr);
                }
                Ok(Some(items))
            }
        }
    }
}

fn bad_value(e: &Entry, expected: &str) -> Error {
    Error::config(format!(
        "line {}: key `{}`: expected {expected}, got `{}`",
        e.line, e.key, e.value
    ))
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(s: &str) -> Option<String> {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        Some(s[1..s.len() - 1].to_string())
    } else {
        None
    }
}

/// Split a value on commas that are not inside quotes.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut in_quote = false;
    for (i, ch) in s.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            ',' if !in_quote => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

// ---------------------------------------------------------------------
// Typed run configuration
// ---------------------------------------------------------------------

/// Preconditioner selection (configuration level; the solver implements
/// the choices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondKind {
    /// Unpreconditioned GMRES.
    None,
    /// Pointwise diagonal (Jacobi) scaling.
    Diagonal,
    /// Complex-shifted Laplacian, inverted exactly by fast sine
    /// transforms. The default: plain GMRES and Jacobi stagnate at
    /// Helmholtz frequencies of practical interest.
    #[default]
    Csl,
}

impl PrecondKind {
    fn parse(s: &str) -> Result<PrecondKind> {
        Ok(match s {
            "none" => PrecondKind::None,
            "diagonal" => PrecondKind::Diagonal,
            "csl" => PrecondKind::Csl,
            _ => {
                return Err(Error::config(format!(
                    "unknown preconditioner `{s}` (expected none, diagonal or csl)"
                )))
            }
        })
    }
}

/// Initial angular profile for the eikonal march (configuration level).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    /// g ≡ 1 (free-space seed).
    One,
    /// g = (1 + p̃(r₀ω))^{1/2} — consistent with the eikonal equation at
    /// the starting shell when angular variation is mild. The default.
    #[default]
    SqrtN,
    /// Closed-form rotated-metric profile a(λ) − b(λ)ω₁.
    Saito,
}

impl InitKind {
    fn parse(s: &str) -> Result<InitKind> {
        Ok(match s {
            "one" => InitKind::One,
            "sqrt-n" => InitKind::SqrtN,
            "saito" => InitKind::Saito,
            _ => {
                return Err(Error::config(format!(
                    "unknown init `{s}` (expected one, sqrt-n or saito)"
                )))
            }
        })
    }
}

/// `[solver]` section: grid geometry plus iteration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Box half-width L.
    pub half_width: f64,
    /// Nodes per axis N.
    pub points: usize,
    /// Relative-residual tolerance.
    pub tol: f64,
    /// Cap on Krylov iterations.
    pub max_iter: usize,
    /// GMRES restart length.
    pub restart: usize,
    pub preconditioner: PrecondKind,
    /// ε-sweep start, ratio and length.
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_count: usize,
    /// Reuse the previous sweep iterate as the next initial guess.
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            half_width: 16.0,
            points: 257,
            tol: 1e-8,
            max_iter: 4000,
            restart: 50,
            preconditioner: PrecondKind::Csl,
            eps_start: 0.1,
            eps_factor: 0.5,
            eps_count: 5,
            warm_start: true,
        }
    }
}

/// `[eikonal]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct EikonalSettings {
    /// Starting radius r₀ ≥ 1 (defaults to the scenario r₀).
    pub r0: f64,
    /// Final radius of the march.
    pub r_max: f64,
    /// Shell ratio ρ > 1 (radii r₀ρᵐ).
    pub rho: f64,
    /// Angular resolution (d=2: grid points on the circle; d=3:
    /// latitude rows, with twice as many longitude columns).
    pub angles: usize,
    pub init: InitKind,
}

impl Default for EikonalSettings {
    fn default() -> Self {
        EikonalSettings { r0: 1.0, r_max: 1000.0, rho: 1.05, angles: 64, init: InitKind::SqrtN }
    }
}

/// A full run configuration: scenario plus numerical settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub solver: SolverSettings,
    pub eikonal: EikonalSettings,
}

const SCENARIO_KEYS: &[&str] = &[
    "dimension",
    "lambda",
    "epsilon",
    "delta",
    "mu",
    "gamma_bound",
    "c_star",
    "r0",
    "big_r0",
];
const FIELD_KEYS: &[&str] = &["n", "p_tilde", "q", "b", "f_re", "f_im", "n_inf"];
const SOLVER_KEYS: &[&str] = &[
    "half_width",
    "points",
    "tol",
    "max_iter",
    "restart",
    "preconditioner",
    "eps_start",
    "eps_factor",
    "eps_count",
    "warm_start",
    "collar_strength",
    "collar_start",
];
const EIKONAL_KEYS: &[&str] = &["r0", "r_max", "rho", "angles", "init"];

impl RunConfig {
    /// Parse and validate a full configuration document.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let doc = ConfigDoc::parse(text)?;
        doc.check_known(&[
            ("scenario", SCENARIO_KEYS),
            ("fields", FIELD_KEYS),
            ("solver", SOLVER_KEYS),
            ("eikonal", EIKONAL_KEYS),
        ])?;

        let n = doc.expr("fields", "n")?;
        let p_tilde = doc.expr("fields", "p_tilde")?;
        let lambda = match doc.f64("scenario", "lambda")? {
            Some(l) => l,
            // With an explicit n the scale is fixed by n itself and λ
            // defaults to 1; the (λ, p̃) parameterization has no such
            // fallback.
            None if p_tilde.is_none() => 1.0,
            None => return Err(Error::config("missing key lambda")),
        };

        let dimension = doc.usize("scenario", "dimension")?.unwrap_or(3);
        let b = doc.expr_list("fields", "b")?.unwrap_or_default();
        let b = if b.iter().all(|e| e.as_constant() == Some(0.0)) { Vec::new() } else { b };

        let collar = match doc.f64("solver", "collar_strength")? {
            Some(strength) => Some(Collar {
                strength,
                start: doc.f64("solver", "collar_start")?.unwrap_or(Collar::DEFAULT_START),
            }),
            None => {
                if doc.get("solver", "collar_start").is_some() {
                    return Err(Error::config(
                        "collar_start given without collar_strength",
                    ));
                }
                None
            }
        };

        let scenario = Scenario {
            dimension,
            lambda,
            epsilon: doc.f64("scenario", "epsilon")?.unwrap_or(1e-2),
            delta: doc.f64("scenario", "delta")?.unwrap_or(1.0),
            mu: doc.f64("scenario", "mu")?.unwrap_or(1.0),
            gamma_bound: doc.f64("scenario", "gamma_bound")?,
            c_star: doc.f64("scenario", "c_star")?,
            r0: doc.f64("scenario", "r0")?.unwrap_or(1.0),
            big_r0: doc.f64("scenario", "big_r0")?.unwrap_or(0.0),
            n,
            p_tilde,
            q_pot: doc.expr("fields", "q")?.unwrap_or_else(FieldExpr::zero),
            b,
            source_re: doc.expr("fields", "f_re")?.unwrap_or_else(FieldExpr::zero),
            source_im: doc.expr("fields", "f_im")?.unwrap_or_else(FieldExpr::zero),
            n_inf: doc.expr("fields", "n_inf")?,
            collar,
        };
        scenario.validate()?;

        let sd = SolverSettings::default();
        let solver = SolverSettings {
            half_width: doc.f64("solver", "half_width")?.unwrap_or(sd.half_width),
            points: doc.usize("solver", "points")?.unwrap_or(sd.points),
            tol: doc.f64("solver", "tol")?.unwrap_or(sd.tol),
            max_iter: doc.usize("solver", "max_iter")?.unwrap_or(sd.max_iter),
            restart: doc.usize("solver", "restart")?.unwrap_or(sd.restart),
            preconditioner: match doc.string("solver", "preconditioner")? {
                Some(s) => PrecondKind::parse(&s)?,
                None => sd.preconditioner,
            },
            eps_start: doc.f64("solver", "eps_start")?.unwrap_or(sd.eps_start),
            eps_factor: doc.f64("solver", "eps_factor")?.unwrap_or(sd.eps_factor),
            eps_count: doc.usize("solver", "eps_count")?.unwrap_or(sd.eps_count),
            warm_start: doc.bool("solver", "warm_start")?.unwrap_or(sd.warm_start),
        };
        if !(solver.half_width > 0.0) {
            return Err(Error::config("half_width must be positive"));
        }

        let ed = EikonalSettings::default();
        let eikonal = EikonalSettings {
            r0: doc.f64("eikonal", "r0")?.unwrap_or(scenario.r0),
            r_max: doc.f64("eikonal", "r_max")?.unwrap_or(ed.r_max),
            rho: doc.f64("eikonal", "rho")?.unwrap_or(ed.rho),
            angles: doc.usize("eikonal", "angles")?.unwrap_or(ed.angles),
            init: match doc.string("eikonal", "init")? {
                Some(s) => InitKind::parse(&s)?,
                None => ed.init,
            },
        };

        Ok(RunConfig { scenario, solver, eikonal })
    }
}

/// Parse a configuration document into a validated [`Scenario`].
///
/// This accepts the full four-section format (the numerical sections are
/// validated and then dropped); see [`RunConfig::parse`] to keep them.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    Ok(RunConfig::parse(text)?.scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_free_space_doc() {
        let s = parse_scenario(
            r#"
            [fields]
            n = "1"
            f_re = "exp(-r^2/2)"
            "#,
        )
        .unwrap();
        assert_eq!(s.dimension, 3);
        assert_eq!(s.lambda, 1.0);
        assert_eq!(s.delta, 1.0);
        assert_eq!(s.big_r0, 0.0);
        assert!(s.b_is_zero());
        assert_eq!(s.n_at(&[0.3, 0.1, -0.2]).unwrap(), 1.0);
    }

    #[test]
    fn saito_doc() {
        let s = parse_scenario(
            r#"
            [scenario]
            dimension = 2
            lambda = 2
            [fields]
            p_tilde = "-x1/(2*r)"
            "#,
        )
        .unwrap();
        assert_eq!(s.lambda, 2.0);
        assert_eq!(s.p_tilde_at(&[2.0, 0.0]).unwrap(), -0.5);
        assert_eq!(s.n_at(&[2.0, 0.0]).unwrap(), 2.0 * 0.5);
    }

    #[test]
    fn missing_lambda_with_p_tilde() {
        let err = parse_scenario(
            r#"
            [fields]
            p_tilde = "-x1/(2*r)"
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("missing key lambda"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_scenario("[scenario]\nlambad = 2\n").unwrap_err();
        assert!(err.to_string().contains("lambad"), "{err}");
    }

    #[test]
    fn inconsistent_n_and_p_tilde() {
        let err = parse_scenario(
            r#"
            [scenario]
            lambda = 1
            [fields]
            n = "2"
            p_tilde = "0.5"
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("disagree"), "{err}");
    }

    #[test]
    fn consistent_n_and_p_tilde_ok() {
        let s = parse_scenario(
            r#"
            [scenario]
            lambda = 2
            [fields]
            n = "2 + x1/r"
            p_tilde = "0.5*w1"
            "#,
        )
        .unwrap();
        assert!(s.n.is_some() && s.p_tilde.is_some());
    }

    #[test]
    fn collar_and_sections_round_trip() {
        let rc = RunConfig::parse(
            r#"
            [scenario]
            dimension = 2
            lambda = 1        # inline comment
            epsilon = 0.25
            [fields]
            n = "1"
            b = "-0.15*x2/(1+r^2)", "0.15*x1/(1+r^2)"
            [solver]
            half_width = 16
            points = 129
            collar_strength = 1.25
            [eikonal]
            rho = 1.05
            "#,
        )
        .unwrap();
        assert_eq!(rc.scenario.b.len(), 2);
        assert_eq!(rc.solver.points, 129);
        let c = rc.scenario.collar.unwrap();
        assert_eq!(c.start, Collar::DEFAULT_START);
        // bulk sees the plain epsilon, wall sees epsilon + strength
        let l = rc.solver.half_width;
        assert_eq!(rc.scenario.epsilon_at(&[0.0, 0.0], l), 0.25);
        assert!((rc.scenario.epsilon_at(&[l, l], l) - (0.25 + 1.25)).abs() < 1e-14);
    }
}
