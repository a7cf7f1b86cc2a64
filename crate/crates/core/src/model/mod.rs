//! Problem description: field expressions, scenarios, presets, and
//! magnetic field data.

pub mod expr;
pub mod magnetic;
pub mod presets;
pub mod scenario;

pub use expr::{differentiate_field, FieldExpr};
pub use magnetic::{magnetic_field, MagneticFieldData};
pub use presets::{preset, preset_text, preset_with_lambda, PRESET_NAMES};
pub use scenario::{
    parse_scenario, Collar, ConfigDoc, EikonalSettings, InitKind, PrecondKind, RunConfig,
    Scenario, SolverSettings,
};

/// Evaluate a field expression at a point (free-function form of
/// [`FieldExpr::eval`]).
pub fn eval_field(expr: &FieldExpr, point: &[f64]) -> crate::Result<f64> {
    expr.eval(point)
}
