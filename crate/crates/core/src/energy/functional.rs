use super::volume::{
    add_side_gradient, cone_volume, side_term, triangle_volume_grad, triangle_volume_hess,
    VolumeField,
};
use super::{EnergyParams, SurfaceMap};
use crate::error::{Error, Result};
use crate::par;
use crate::{Mat3, Vec3};

/// `(∇u, |∇u|²)` on a triangle as the two partials.
fn grad_sq(u: &SurfaceMap, t: usize) -> (Vec3, Vec3, f64) {
    let (ux, uy) = u.partials(t);
    (ux, uy, ux.norm_squared() + uy.norm_squared())
}

/// `D(u) = ½ ∫ |∇u|²`.
pub fn dirichlet(u: &SurfaceMap) -> f64 {
    let m = u.mesh();
    par::sum_range(m.num_triangles(), |t| 0.5 * m.area(t) * grad_sq(u, t).2)
}

/// `D_{ε,p}(u) = ∫ ½|∇u|² + ε^{p-2}/p (1 + |∇u|²)^{p/2}`.
pub fn penalized_dirichlet(u: &SurfaceMap, eps: f64, p: f64) -> f64 {
    let m = u.mesh();
    let c = if eps == 0.0 { 0.0 } else { eps.powf(p - 2.0) };
    par::sum_range(m.num_triangles(), |t| {
        let s = grad_sq(u, t).2;
        m.area(t) * (0.5 * s + c / p * (1.0 + s).powf(p / 2.0))
    })
}

/// Per-triangle `|∇u|²`.
pub fn energy_density(u: &SurfaceMap) -> Vec<f64> {
    par::map_range(u.mesh().num_triangles(), |t| grad_sq(u, t).2)
}

/// Energy parts of `E = D_{ε,p} + V`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    pub dirichlet: f64,
    pub penalized: f64,
    pub volume: f64,
    pub total: f64,
}

/// `E` on the branch of `V` fixed by `pole`.
pub fn local_energy(u: &SurfaceMap, params: &EnergyParams, pole: &Vec3) -> Result<EnergyReport> {
    let dirichlet = dirichlet(u);
    let penalized = penalized_dirichlet(u, params.eps, params.p);
    let volume = cone_volume(u, params)? + side_term(u, params, pole);
    Ok(EnergyReport { dirichlet, penalized, volume, total: penalized + volume })
}

/// Weight `w = 1 + ε^{p-2}(1+s)^{p/2-1}` and curvature coefficient
/// `c = ε^{p-2}(p-2)(1+s)^{p/2-2}` of the energy density at `s = |∇u|²`.
fn weights(params: &EnergyParams, s: f64) -> (f64, f64) {
    let e = params.eps_factor();
    let p = params.p;
    (
        1.0 + e * (1.0 + s).powf(p / 2.0 - 1.0),
        e * (p - 2.0) * (1.0 + s).powf(p / 2.0 - 2.0),
    )
}

/// Gradient of the triangle's `D_{ε,p}` contribution with respect to its corners.
fn triangle_dirichlet_grad(u: &SurfaceMap, params: &EnergyParams, t: usize) -> [Vec3; 3] {
    let m = u.mesh();
    let (ux, uy, s) = grad_sq(u, t);
    let (w, _) = weights(params, s);
    let g = m.basis_gradients(t);
    [0, 1, 2].map(|k| (ux * g[k][0] + uy * g[k][1]) * (m.area(t) * w))
}

/// Full nodal gradient of `E` (3 components per vertex).
pub fn nodal_gradient(u: &SurfaceMap, params: &EnergyParams) -> Result<Vec<Vec3>> {
    let m = u.mesh();
    let field = VolumeField::new(params);
    let per_tri = par::map_range(m.num_triangles(), |t| -> Result<[Vec3; 3]> {
        let p = m.triangles[t].map(|i| u.positions[i]);
        let gv = triangle_volume_grad(&field, &p)?;
        let gd = triangle_dirichlet_grad(u, params, t);
        Ok([0, 1, 2].map(|k| gd[k] + gv[k]))
    });
    let mut g = vec![Vec3::zeros(); u.len()];
    for (t, gt) in per_tri.into_iter().enumerate() {
        let gt = gt?;
        for k in 0..3 {
            g[m.triangles[t][k]] += gt[k];
        }
    }
    add_side_gradient(u, params, &mut g);
    Ok(g)
}

/// Hessian blocks of one triangle's contribution to `E`.
pub fn triangle_hessian(u: &SurfaceMap, params: &EnergyParams, t: usize) -> Result<[[Mat3; 3]; 3]> {
    let m = u.mesh();
    let p = m.triangles[t].map(|i| u.positions[i]);
    let mut h = triangle_volume_hess(&VolumeField::new(params), &p)?;
    let (ux, uy, s) = grad_sq(u, t);
    let (w, c) = weights(params, s);
    let g = m.basis_gradients(t);
    let a = m.area(t);
    let gk: [Vec3; 3] = [0, 1, 2].map(|k| ux * g[k][0] + uy * g[k][1]);
    for k in 0..3 {
        for l in 0..3 {
            let dd = g[k][0] * g[l][0] + g[k][1] * g[l][1];
            h[k][l] += Mat3::identity() * (a * w * dd) + gk[k] * gk[l].transpose() * (a * c);
        }
    }
    Ok(h)
}

/// `δE(u)[ψ]`; boundary entries of `ψ` must be tangent to `Σ`.
pub fn first_variation(u: &SurfaceMap, params: &EnergyParams, psi: &[Vec3]) -> Result<f64> {
    u.mesh().check_len(psi.len())?;
    for &b in &u.mesh().boundary {
        let n = params.surface.outward_normal(&u.positions[b]);
        let nc = psi[b].dot(&n);
        if nc.abs() > 1e-8 * psi[b].norm().max(1.0) {
            return Err(Error::NotTangent { normal_component: nc });
        }
    }
    let g = nodal_gradient(u, params)?;
    let terms: Vec<f64> = g.iter().zip(psi).map(|(a, b)| a.dot(b)).collect();
    Ok(par::tree_sum(&terms))
}

/// Riesz representative of `δE` in the lumped `L²` product, with boundary
/// rows restricted to `TΣ`.
#[derive(Debug, Clone)]
pub struct Residual {
    pub riesz: Vec<Vec3>,
    /// Full nodal gradient, including normal boundary components.
    pub gradient: Vec<Vec3>,
    /// `‖r‖_M = (Σ m_i |r_i|²)^{1/2}`.
    pub norm: f64,
    /// `max_b |P_T g_b| / ℓ_b`: discrete failure of `u_r ⊥ TΣ`.
    pub orthogonality_defect: f64,
}

pub fn residual(u: &SurfaceMap, params: &EnergyParams) -> Result<Residual> {
    let g = nodal_gradient(u, params)?;
    Ok(residual_from_gradient(u, params, g))
}

pub(crate) fn residual_from_gradient(u: &SurfaceMap, params: &EnergyParams, g: Vec<Vec3>) -> Residual {
    let m = u.mesh();
    let mass = m.lumped_mass();
    let mut tang = g.clone();
    let mut defect: f64 = 0.0;
    for (k, &b) in m.boundary.iter().enumerate() {
        let n = params.surface.outward_normal(&u.positions[b]);
        tang[b] -= n * n.dot(&g[b]);
        defect = defect.max(tang[b].norm() / m.boundary_weights()[k]);
    }
    let riesz: Vec<Vec3> = tang.iter().zip(mass).map(|(v, &mi)| v / mi).collect();
    let sq: Vec<f64> = tang.iter().zip(mass).map(|(v, &mi)| v.norm_squared() / mi).collect();
    Residual { riesz, gradient: g, norm: par::tree_sum(&sq).sqrt(), orthogonality_defect: defect }
}

/// `‖Φ‖_{L²}` for `Φ = ¼(|u_x|² - |u_y|²) - (i/2)⟨u_x, u_y⟩`.
pub fn hopf_defect(u: &SurfaceMap) -> f64 {
    let m = u.mesh();
    par::sum_range(m.num_triangles(), |t| {
        let (ux, uy) = u.partials(t);
        let re = 0.25 * (ux.norm_squared() - uy.norm_squared());
        let im = 0.5 * ux.dot(&uy);
        m.area(t) * (re * re + im * im)
    })
    .sqrt()
}

/// Discrete mean curvature of the image at interior vertices (`None` on the
/// boundary): the cotangent Laplacian of the positions against the vertex
/// normal, per barycentric area. Positive when the surface bends towards
/// `u_x × u_y`; `2/ρ` on a sphere of radius `ρ`.
pub fn vertex_mean_curvature(u: &SurfaceMap) -> Vec<Option<f64>> {
    let m = u.mesh();
    let n = u.len();
    let mut lap = vec![Vec3::zeros(); n];
    let mut area = vec![0.0; n];
    let mut normal = vec![Vec3::zeros(); n];
    for tri in &m.triangles {
        let x = tri.map(|k| u.positions[k]);
        let cr = (x[1] - x[0]).cross(&(x[2] - x[0]));
        let a = 0.5 * cr.norm();
        if a == 0.0 {
            continue;
        }
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let (e1, e2) = (x[i] - x[k], x[j] - x[k]);
            let w = 0.5 * e1.dot(&e2) / e1.cross(&e2).norm();
            lap[tri[i]] += (x[j] - x[i]) * w;
            lap[tri[j]] += (x[i] - x[j]) * w;
            area[tri[k]] += a / 3.0;
            normal[tri[k]] += cr;
        }
    }
    (0..n)
        .map(|v| {
            if m.is_boundary(v) || area[v] == 0.0 || normal[v].norm() == 0.0 {
                None
            } else {
                Some(lap[v].dot(&normal[v].normalize()) / area[v])
            }
        })
        .collect()
}
