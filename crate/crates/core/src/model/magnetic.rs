//! Magnetic field data `B = Db − (Db)ᵀ` derived from the potential.
//!
//! The d×d antisymmetric matrix has entries `B_jk = ∂b_j/∂x_k − ∂b_k/∂x_j`
//! and its tangential part is the vector `(B_τ)_j = Σ_k ω_k B_kj` with
//! `ω = x/|x|`. `B_τ` is automatically orthogonal to ω (antisymmetry), and
//! gauge transformations `b → b + ∇χ` leave `B` unchanged.

use crate::error::{Error, Result};
use crate::model::expr::differentiate_field;
use crate::model::scenario::Scenario;

/// Magnetic field at one point.
#[derive(Debug, Clone, Copy)]
pub struct MagneticFieldData {
    /// Spatial dimension (2 or 3); only the leading d×d block and the
    /// first d components below are meaningful.
    pub d: usize,
    /// `B_jk = ∂b_j/∂x_k − ∂b_k/∂x_j`, exactly antisymmetric: the matrix
    /// is assembled as `D − Dᵀ` from a single difference matrix `D`.
    pub b_matrix: [[f64; 3]; 3],
    /// Tangential part `(B_τ)_j = Σ_k ω_k B_kj`.
    pub b_tau: [f64; 3],
}

impl MagneticFieldData {
    /// Frobenius-type sup of the matrix entries.
    pub fn max_entry(&self) -> f64 {
        let mut m = 0.0_f64;
        for row in &self.b_matrix {
            for v in row {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Euclidean norm of B_τ.
    pub fn b_tau_norm(&self) -> f64 {
        self.b_tau.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Evaluate the magnetic field of a scenario at a point.
///
/// Derivatives of the configured potential components use central
/// differences with the default step `1e-5·(1+|x|)`; the matrix is
/// antisymmetrized exactly by construction.
pub fn magnetic_field(scenario: &Scenario, x: &[f64]) -> Result<MagneticFieldData> {
    let d = scenario.dimension;
    if x.len() != d {
        return Err(Error::Domain(format!(
            "point has dimension {}, scenario has {}",
            x.len(),
            d
        )));
    }
    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Domain(
            "magnetic field data needs ω = x/|x|, undefined at the origin".into(),
        ));
    }

    let mut b_matrix = [[0.0; 3]; 3];
    if !scenario.b_is_zero() {
        // difference matrix D_jk = ∂b_j/∂x_k
        let mut diff = [[0.0; 3]; 3];
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue; // cancels in D − Dᵀ
                }
                diff[j][k] = differentiate_field(&scenario.b[j], x, k, None)?;
            }
        }
        for j in 0..d {
            for k in 0..d {
                b_matrix[j][k] = diff[j][k] - diff[k][j];
            }
        }
    }

    let mut b_tau = [0.0; 3];
    for j in 0..d {
        let mut acc = 0.0;
        for (k, xk) in x.iter().enumerate() {
            acc += (xk / r) * b_matrix[k][j];
        }
        b_tau[j] = acc;
    }

    Ok(MagneticFieldData { d, b_matrix, b_tau })
}
