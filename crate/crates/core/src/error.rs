//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the laboratory.
///
/// The variants are grouped by *kind* rather than by module so that
/// callers (in particular the command-line driver) can map them onto a
/// small set of exit codes: configuration problems, numerical failures,
/// and hypothesis violations are distinguishable without string matching.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration: syntax errors, unknown keys, missing
    /// required keys, values out of range.
    #[error("config error: {0}")]
    Config(String),

    /// Expression syntax error with position information (1-based line
    /// and column of the offending token within the expression source).
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A mathematical domain violation while evaluating an expression
    /// (division by zero, `log` of a non-positive value, `ω` at the
    /// origin, …).
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of an operation was not met (caller error that is
    /// only detectable at run time, e.g. an inconsistent (u, f) pair).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A requested evaluation point or region lies outside the data
    /// (empty shell, point beyond the marched range, …).
    #[error("range error: {0}")]
    Range(String),

    /// The request would exceed a resource limit (grid too large).
    #[error("resource limit: {0}")]
    Resource(String),

    /// The iterative solver stopped without reaching the tolerance. The
    /// best iterate found and the residual history are carried along for
    /// post-mortem inspection.
    #[error(
        "solver did not converge: relative residual {residual:.3e} after {iterations} iterations \
         (tolerance {tol:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
        /// Relative residual after each Krylov step.
        history: Vec<f64>,
        /// Best iterate reached (interior unknowns, row-major).
        best: Vec<num_complex::Complex64>,
    },

    /// The eikonal march lost hyperbolicity: the radicand of the
    /// Hamilton–Jacobi flux turned negative, which happens when the
    /// medium varies too strongly (C* too large).
    #[error("eikonal breakdown: C* too large (radicand {radicand:.3e} at r = {r:.6})")]
    EikonalBreakdown { r: f64, radicand: f64 },

    /// A verified hypothesis indicator exceeds its admissible bound.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    /// Filesystem problems while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand used by the parsers.
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
