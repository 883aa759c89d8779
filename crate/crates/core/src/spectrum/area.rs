use super::{DofMap, HessianSystem};
use crate::energy::{nodal_gradient, EnergyParams, Forcing, SurfaceMap};
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::Vec3;

/// Default relative threshold on `|u_x × u_y|` for branch points.
pub const DEFAULT_BRANCH_TOL: f64 = 1e-3;

/// Per-triangle unit normals `u_x × u_y / |u_x × u_y|`.
#[derive(Debug, Clone)]
pub struct NormalField {
    pub normals: Vec<Vec3>,
    /// Triangles whose area element is below `branch_tol · mean`.
    pub branch_mask: Vec<bool>,
}

impl NormalField {
    pub fn branch_fraction(&self) -> f64 {
        self.branch_mask.iter().filter(|&&b| b).count() as f64 / self.branch_mask.len() as f64
    }

    /// Area-weighted vertex normals over unmasked triangles.
    pub fn vertex_normals(&self, u: &SurfaceMap) -> Vec<Vec3> {
        let mesh = u.mesh();
        let mut acc = vec![Vec3::zeros(); u.len()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if self.branch_mask[t] {
                continue;
            }
            let (ux, uy) = u.partials(t);
            let w = ux.cross(&uy).norm() * mesh.area(t);
            for &v in tri {
                acc[v] += self.normals[t] * w;
            }
        }
        acc.into_iter()
            .map(|n| if n.norm() > 0.0 { n.normalize() } else { n })
            .collect()
    }
}

pub fn normal_field(u: &SurfaceMap, branch_tol: f64) -> Result<NormalField> {
    let nt = u.mesh().num_triangles();
    let cross: Vec<Vec3> = (0..nt)
        .map(|t| {
            let (ux, uy) = u.partials(t);
            ux.cross(&uy)
        })
        .collect();
    let mean = cross.iter().map(|c| c.norm()).sum::<f64>() / nt as f64;
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter("constant map has no normal field".into()));
    }
    let branch_mask: Vec<bool> = cross.iter().map(|c| c.norm() < branch_tol * mean).collect();
    let normals = cross
        .iter()
        .zip(&branch_mask)
        .map(|(c, &m)| if m { Vec3::zeros() } else { c.normalize() })
        .collect();
    Ok(NormalField { normals, branch_mask })
}

/// `B_H(u)` on scalar normal perturbations `f n`:
/// `∫|∇f|² - f²(|∇u|²/2)(H²/2) + ∮ f² A_Σ^{u_r}(n, n)`.
///
/// `H` is the interior value of the forcing in `params`; `u_r` is the weak
/// conormal derivative, read off the `ε = 0` nodal gradient at the boundary.
pub fn area_index_form(u: &SurfaceMap, params: &EnergyParams) -> Result<HessianSystem> {
    area_index_form_signed(u, params, 1.0)
}

#[doc(hidden)]
pub fn area_index_form_signed(u: &SurfaceMap, params: &EnergyParams, boundary_sign: f64) -> Result<HessianSystem> {
    let mesh = u.mesh();
    let nf = normal_field(u, DEFAULT_BRANCH_TOL)?;
    let frac = nf.branch_fraction();
    if frac > 0.1 {
        return Err(Error::Branching(frac));
    }
    let h = params.interior_value();
    let mut trip = mesh.stiffness().to_triplets();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if nf.branch_mask[t] {
            continue;
        }
        let (ux, uy) = u.partials(t);
        let s = ux.norm_squared() + uy.norm_squared();
        let c = -mesh.area(t) / 3.0 * (s / 2.0) * (h * h / 2.0);
        for &v in tri {
            trip.push((v, v, c));
        }
    }
    let eps0 = EnergyParams { eps: 0.0, forcing: Forcing::Constant(h), scale: 1.0, ..*params };
    let g = nodal_gradient(u, &eps0)?;
    let vn = nf.vertex_normals(u);
    let surf = &params.surface;
    for &b in &mesh.boundary {
        let y = u.positions[b];
        let outward = surf.outward_normal(&y);
        let n = vn[b] - outward * outward.dot(&vn[b]);
        let a = surf.second_fundamental_form(&y, &g[b], &n)?;
        trip.push((b, b, boundary_sign * a));
    }
    let a = Csr::from_triplets(u.len(), trip).symmetrized();
    Ok(HessianSystem { a, mass: mesh.lumped_mass().to_vec(), dofs: DofMap::scalar(u.len()) })
}

/// `B_H(f, f)` for a nodal scalar field.
pub fn area_form_value(system: &HessianSystem, f: &[f64]) -> f64 {
    system.a.mul_vec(f).iter().zip(f).map(|(p, q)| p * q).sum()
}
