use serde::Serialize;

use super::{
    area_index_form, assemble_second_variation_with, default_index_tol,
    morse_index, normal_field, HessianOptions, DEFAULT_BRANCH_TOL, DEFAULT_K,
};
use crate::energy::{dirichlet, nodal_gradient, EnergyParams, Forcing, SurfaceMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct IndexComparison {
    pub index_b: usize,
    pub index_e: usize,
    pub pass: bool,
    pub eigenvalues_b: Vec<f64>,
    pub eigenvalues_e: Vec<f64>,
    /// Zero band used for both indices.
    pub zero_band: f64,
}

/// Eigenvalues within `h²` of zero count as null in the comparison: smooth
/// Jacobi fields that are not exact discrete symmetries (normal parts of
/// rotations, for one) land at `O(h²)` rather than at round-off.
pub fn comparison_band(u: &SurfaceMap) -> f64 {
    let h = u.mesh().h();
    h * h
}

/// `index(B_H(u)) ≤ Ind_H(u)` with `Ind_H` taken at `ε = 0`; see
/// [`comparison_band`] for the zero band.
pub fn index_comparison_check(u: &SurfaceMap, params: &EnergyParams) -> Result<IndexComparison> {
    index_comparison_with(u, params, HessianOptions::default())
}

#[doc(hidden)]
pub fn index_comparison_with(
    u: &SurfaceMap,
    params: &EnergyParams,
    opts: HessianOptions,
) -> Result<IndexComparison> {
    let p0 = params.with_eps(0.0);
    let sb = area_index_form(u, &p0)?;
    let se = assemble_second_variation_with(u, &p0, opts)?;
    let band = comparison_band(u);
    let rb = morse_index(&sb, DEFAULT_K, default_index_tol(&sb).max(band))?;
    let re = morse_index(&se, DEFAULT_K, default_index_tol(&se).max(band))?;
    Ok(IndexComparison {
        index_b: rb.index,
        index_e: re.index,
        pass: rb.index <= re.index,
        eigenvalues_b: rb.eigenvalues,
        eigenvalues_e: re.eigenvalues,
        zero_band: band,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HerschReport {
    pub dirichlet: f64,
    pub bound: f64,
    pub margin: f64,
    /// `(16π + 2∮ A_Σ^{u_r}(n, n)) / H²`.
    pub sharper_bound: f64,
    pub pass: bool,
}

/// `D(u) ≤ 16π/H²` for maps confined to `Ω̄`.
pub fn hersch_bound_check(u: &SurfaceMap, params: &EnergyParams, mesh_tol: f64) -> Result<HerschReport> {
    let h = params.interior_value();
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("Hersch bound needs H > 0".into()));
    }
    let surf = &params.surface;
    for y in &u.positions {
        let d = surf.outside_distance_jet(y)?.0;
        if d > mesh_tol {
            return Err(Error::InvalidParameter(format!("map leaves the region by {d:e}")));
        }
    }
    let d = dirichlet(u);
    let bound = 16.0 * std::f64::consts::PI / (h * h);
    let eps0 = EnergyParams { eps: 0.0, forcing: Forcing::Constant(h), scale: 1.0, ..*params };
    let g = nodal_gradient(u, &eps0)?;
    let nf = normal_field(u, DEFAULT_BRANCH_TOL)?;
    let vn = nf.vertex_normals(u);
    let mut ring = 0.0;
    for &b in &u.mesh().boundary {
        let y = u.positions[b];
        let out = surf.outward_normal(&y);
        let n = vn[b] - out * out.dot(&vn[b]);
        ring += surf.second_fundamental_form(&y, &g[b], &n)?;
    }
    Ok(HerschReport {
        dirichlet: d,
        bound,
        margin: bound - d,
        sharper_bound: (16.0 * std::f64::consts::PI + 2.0 * ring) / (h * h),
        pass: d <= bound + mesh_tol,
    })
}
