use serde::Serialize;

use super::HessianSystem;
use crate::error::{Error, Result};
use crate::linalg::{dense_generalized, lowest_generalized};

/// Default number of eigenpairs.
pub const DEFAULT_K: usize = 12;
/// Reduced systems up to this size use the dense reference solver.
pub const DENSE_LIMIT: usize = 3000;
/// Required eigenpair residual.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub index_tol: f64,
    pub dof_count: usize,
    pub method: &'static str,
    pub max_residual: f64,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Default zero band: `1e-8 · ‖A‖∞`.
pub fn default_index_tol(system: &HessianSystem) -> f64 {
    1e-8 * system.a.inf_norm()
}

/// Lowest `k` eigenpairs of `A x = λ M x` and the induced index and nullity.
pub fn morse_index(system: &HessianSystem, k: usize, index_tol: f64) -> Result<SpectralReport> {
    morse_index_with(system, k, index_tol, DENSE_LIMIT)
}

pub fn morse_index_with(
    system: &HessianSystem,
    k: usize,
    index_tol: f64,
    dense_limit: usize,
) -> Result<SpectralReport> {
    let n = system.a.n;
    let k = k.min(n);
    let (pairs, method) = if n <= dense_limit {
        (dense_generalized(&system.a, &system.mass)?, "dense")
    } else {
        (lowest_generalized(&system.a, &system.mass, k, 0x5eed)?, "shift-invert-lanczos")
    };
    let eigenvalues: Vec<f64> = pairs.values[..k].to_vec();
    let scale = system.a.inf_norm().max(1.0);
    let max_residual = pairs.residuals[..k].iter().copied().fold(0.0, f64::max);
    if !(max_residual <= RESIDUAL_TOL * scale) {
        return Err(Error::Eigen(format!("eigenpair residual {max_residual:e} above tolerance")));
    }
    let index = eigenvalues.iter().filter(|&&l| l < -index_tol).count();
    let nullity = eigenvalues.iter().filter(|&&l| l.abs() <= index_tol).count();
    Ok(SpectralReport {
        eigenvalues,
        index,
        nullity,
        index_tol,
        dof_count: n,
        method,
        max_residual,
        eigenvectors: pairs.vectors[..k].to_vec(),
    })
}
