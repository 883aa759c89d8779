use crate::energy::{nodal_gradient, triangle_hessian, volume_hessian_edges, EnergyParams, SurfaceMap};
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::par;
use crate::surface::tangent_frame;
use crate::{Mat3, Vec3};

/// Reduced degrees of freedom: 3 per interior vertex, 2 tangential per
/// boundary vertex (or 1 per vertex for scalar forms).
#[derive(Debug, Clone)]
pub struct DofMap {
    offsets: Vec<usize>,
    /// Columns spanning each vertex's admissible directions.
    bases: Vec<Vec<Vec3>>,
    n: usize,
    scalar: bool,
}

impl DofMap {
    /// Vector DOFs for `u`; boundary frames start from the image of the
    /// outgoing boundary edge and are rotated by `rotation` radians.
    pub fn vector(u: &SurfaceMap, params: &EnergyParams, rotation: f64) -> Result<Self> {
        let mesh = u.mesh();
        let nb = mesh.boundary.len();
        let mut bases = Vec::with_capacity(u.len());
        let mut offsets = Vec::with_capacity(u.len());
        let mut n = 0;
        for v in 0..u.len() {
            offsets.push(n);
            match mesh.boundary_position(v) {
                None => {
                    bases.push(vec![Vec3::x(), Vec3::y(), Vec3::z()]);
                    n += 3;
                }
                Some(k) => {
                    let y = u.positions[v];
                    let eta = params.surface.inward_normal(&y);
                    let mut hint = u.positions[mesh.boundary[(k + 1) % nb]] - y;
                    if (hint - eta * eta.dot(&hint)).norm() < 1e-12 {
                        hint = y - u.positions[mesh.boundary[(k + nb - 1) % nb]];
                    }
                    if !eta.iter().all(|c| c.is_finite()) {
                        return Err(Error::DegenerateFrame(v));
                    }
                    // collapsed boundary: fall back to a fixed axis
                    let hint = ((hint - eta * eta.dot(&hint)).norm() >= 1e-12).then_some(hint);
                    let (t1, t2) = tangent_frame(&eta, hint.as_ref());
                    let (c, s) = (rotation.cos(), rotation.sin());
                    bases.push(vec![t1 * c + t2 * s, t2 * c - t1 * s]);
                    n += 2;
                }
            }
        }
        Ok(Self { offsets, bases, n, scalar: false })
    }

    /// One scalar DOF per vertex.
    pub fn scalar(nv: usize) -> Self {
        Self { offsets: (0..nv).collect(), bases: vec![Vec::new(); nv], n: nv, scalar: true }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar
    }

    pub fn offset(&self, v: usize) -> usize {
        self.offsets[v]
    }

    pub fn basis(&self, v: usize) -> &[Vec3] {
        &self.bases[v]
    }

    /// Nodal vectors from reduced coordinates.
    pub fn embed(&self, x: &[f64]) -> Vec<Vec3> {
        assert!(!self.scalar);
        self.bases
            .iter()
            .zip(&self.offsets)
            .map(|(b, &o)| b.iter().enumerate().map(|(i, t)| t * x[o + i]).sum())
            .collect()
    }

    /// Reduced coordinates `Tᵀ g` of a nodal covector.
    pub fn restrict(&self, g: &[Vec3]) -> Vec<f64> {
        assert!(!self.scalar);
        let mut out = vec![0.0; self.n];
        for (v, b) in self.bases.iter().enumerate() {
            for (i, t) in b.iter().enumerate() {
                out[self.offsets[v] + i] = t.dot(&g[v]);
            }
        }
        out
    }
}

/// Discrete second variation on reduced DOFs.
#[derive(Debug, Clone)]
pub struct HessianSystem {
    pub a: Csr,
    /// Lumped mass per DOF.
    pub mass: Vec<f64>,
    pub dofs: DofMap,
}

impl HessianSystem {
    /// `ψᵀAψ / ψᵀMψ`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let num: f64 = ax.iter().zip(x).map(|(p, q)| p * q).sum();
        let den: f64 = x.iter().zip(&self.mass).map(|(p, m)| m * p * p).sum();
        num / den
    }
}

/// Knobs for [`assemble_second_variation_with`].
#[derive(Debug, Clone, Copy)]
pub struct HessianOptions {
    /// Rotation of boundary tangent frames (the form is frame-invariant).
    pub frame_rotation: f64,
    /// Multiplier on the boundary curvature term; `1` is correct.
    pub boundary_sign: f64,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self { frame_rotation: 0.0, boundary_sign: 1.0 }
    }
}

/// `δ²E(u)` on `H_u`, reduced to tangential boundary DOFs.
pub fn assemble_second_variation(u: &SurfaceMap, params: &EnergyParams) -> Result<HessianSystem> {
    assemble_second_variation_with(u, params, HessianOptions::default())
}

fn push_block(trip: &mut Vec<(usize, usize, f64)>, dofs: &DofMap, a: usize, b: usize, m: &Mat3) {
    let (ba, bb) = (dofs.basis(a), dofs.basis(b));
    let (oa, ob) = (dofs.offset(a), dofs.offset(b));
    for (i, ti) in ba.iter().enumerate() {
        let mt = m.transpose() * ti;
        for (j, tj) in bb.iter().enumerate() {
            trip.push((oa + i, ob + j, mt.dot(tj)));
        }
    }
}

pub fn assemble_second_variation_with(
    u: &SurfaceMap,
    params: &EnergyParams,
    opts: HessianOptions,
) -> Result<HessianSystem> {
    let mesh = u.mesh();
    let dofs = DofMap::vector(u, params, opts.frame_rotation)?;
    let blocks = par::map_range(mesh.num_triangles(), |t| triangle_hessian(u, params, t));
    let mut trip = Vec::with_capacity(mesh.num_triangles() * 81);
    for (t, h) in blocks.into_iter().enumerate() {
        let h = h?;
        let tri = mesh.triangles[t];
        for k in 0..3 {
            for l in 0..3 {
                push_block(&mut trip, &dofs, tri[k], tri[l], &h[k][l]);
            }
        }
    }
    for (a, b, h) in volume_hessian_edges(u, params) {
        let vs = [a, b];
        for r in 0..2 {
            for s in 0..2 {
                push_block(&mut trip, &dofs, vs[r], vs[s], &h[r][s]);
            }
        }
    }
    // second-order part of the boundary retraction: ⟨g_b, η⟩ ∇²φ(ψ, ψ)/|∇φ|
    let g = nodal_gradient(u, params)?;
    let surf = &params.surface;
    for &b in &mesh.boundary {
        let y = u.positions[b];
        let eta = surf.inward_normal(&y);
        let m = surf.hess() * (opts.boundary_sign * g[b].dot(&eta) / surf.grad(&y).norm());
        push_block(&mut trip, &dofs, b, b, &m);
    }
    let a = Csr::from_triplets(dofs.len(), trip).symmetrized();
    let lumped = mesh.lumped_mass();
    let mut mass = vec![0.0; dofs.len()];
    for v in 0..u.len() {
        for i in 0..dofs.basis(v).len() {
            mass[dofs.offset(v) + i] = lumped[v];
        }
    }
    Ok(HessianSystem { a, mass, dofs })
}
