//! Initial maps and seed sweepouts.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{EnergyParams, HomotopyPath, SurfaceMap};
use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::surface::{tangent_frame, ImplicitSurface};
use crate::Vec3;

/// Equatorial section `c + L(x, y, 0)`; the identity on the unit sphere.
pub fn flat(mesh: Arc<DiskMesh>, surface: &ImplicitSurface) -> SurfaceMap {
    let s = *surface;
    SurfaceMap::from_fn(mesh, move |[x, y]| s.from_unit(&Vec3::new(x, y, 0.0)))
}

/// Every vertex at the projection of `point` onto `Σ`.
pub fn constant(mesh: Arc<DiskMesh>, surface: &ImplicitSurface, point: &Vec3) -> Result<SurfaceMap> {
    let q = surface.closest_point(point)?;
    Ok(SurfaceMap::from_fn(mesh, move |_| q))
}

/// Spherical cap of mean curvature `h` (radius `2/h`) bounded by the circle
/// `Σ ∩ {⟨y, a⟩ = s}` of a sphere `Σ`, bulging towards `+a`, oriented so that
/// `u_x × u_y` points at the centre of the cap sphere.
///
/// `h = 0` gives the flat disk spanning the circle.
pub fn cap_at(mesh: Arc<DiskMesh>, surface: &ImplicitSurface, h: f64, axis: &Vec3, s: f64) -> Result<SurfaceMap> {
    if !surface.is_sphere() {
        return Err(Error::InvalidParameter("cap maps need a spherical constraint surface".into()));
    }
    if !(-1.0..=1.0).contains(&s) || axis.norm() == 0.0 || !(h >= 0.0) {
        return Err(Error::InvalidParameter("cap: need |s| <= 1, a != 0, h >= 0".into()));
    }
    let radius = surface.axes()[0];
    let a = axis.normalize();
    let (e1, e2) = tangent_frame(&a, None);
    let r = (1.0 - s * s).max(0.0).sqrt();
    let hu = h * radius;
    let map = move |p: Vec3| surface.from_unit(&p);
    if r == 0.0 {
        let q = map(a * s);
        return Ok(SurfaceMap::from_fn(mesh, move |_| q));
    }
    if hu == 0.0 {
        return Ok(SurfaceMap::from_fn(mesh, move |[x, y]| map(a * s + (e1 * x + e2 * y) * r)));
    }
    let rho = 2.0 / hu;
    if rho < r {
        return Err(Error::InvalidParameter(format!(
            "no cap of curvature {h} spans a circle of radius {r}"
        )));
    }
    let centre = a * (s - (rho * rho - r * r).sqrt());
    let lambda = ((r / rho).asin() / 2.0).tan();
    Ok(SurfaceMap::from_fn(mesh, move |[x, y]| {
        let (u, v) = (lambda * x, -lambda * y);
        let q = 1.0 + u * u + v * v;
        let sig = e1 * (2.0 * u / q) + e2 * (2.0 * v / q) + a * ((1.0 - u * u - v * v) / q);
        map(centre + sig * rho)
    })
    .with_boundary_snapped(surface))
}

/// Cap of curvature `h` meeting `Σ` orthogonally (unit sphere: `s = -h/√(4+h²)`).
pub fn cap(mesh: Arc<DiskMesh>, surface: &ImplicitSurface, h: f64, axis: &Vec3) -> Result<SurfaceMap> {
    let hu = h * surface.axes()[0];
    let s = -hu / (4.0 + hu * hu).sqrt();
    cap_at(mesh, surface, h, axis, s)
}

/// Uniform random field in `[-1, 1]³`, projected onto `TΣ` at boundary vertices.
pub fn random_field(u: &SurfaceMap, surface: &ImplicitSurface, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi: Vec<Vec3> = (0..u.len())
        .map(|_| Vec3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect();
    for &b in &u.mesh().boundary {
        let n = surface.outward_normal(&u.positions[b]);
        let c = n.dot(&psi[b]);
        psi[b] -= n * c;
    }
    psi
}

/// `u + amplitude·ψ` for a random tangent field `ψ`, boundary retracted.
pub fn perturbed(u: &SurfaceMap, surface: &ImplicitSurface, amplitude: f64, seed: u64) -> Result<SurfaceMap> {
    let psi = random_field(u, surface, seed);
    let mut positions: Vec<Vec3> = u.positions.iter().zip(&psi).map(|(p, d)| p + d * amplitude).collect();
    for &b in &u.mesh().boundary {
        positions[b] = surface.closest_point(&positions[b])?;
    }
    u.with_positions(positions)
}

/// Flat disk precomposed with the disk automorphism `z ↦ (z - a)/(1 - āz)`.
/// Half of its energy sits in a ball of radius `~ 1 - |a|` around `a`.
pub fn mobius(mesh: Arc<DiskMesh>, surface: &ImplicitSurface, a: [f64; 2]) -> Result<SurfaceMap> {
    if a[0].hypot(a[1]) >= 1.0 {
        return Err(Error::InvalidParameter("Möbius parameter must lie in the open disk".into()));
    }
    let s = *surface;
    Ok(SurfaceMap::from_fn(mesh, move |[x, y]| {
        // (z - a) / (1 - ā z)
        let (nr, ni) = (x - a[0], y - a[1]);
        let (dr, di) = (1.0 - (a[0] * x + a[1] * y), -(a[0] * y - a[1] * x));
        let d2 = dr * dr + di * di;
        s.from_unit(&Vec3::new((nr * dr + ni * di) / d2, (ni * dr - nr * di) / d2, 0.0))
    })
    .with_boundary_snapped(surface))
}

/// Caps of curvature `h` through the circles at height `s = cos θ`,
/// `θ ∈ [0, π]` uniform, from the constant map at `+a` to the one at `-a`.
///
/// The bead count is doubled until the spacing cap is met.
pub fn cap_sweepout(
    mesh: Arc<DiskMesh>,
    params: &EnergyParams,
    h: f64,
    axis: &Vec3,
    beads: usize,
    spacing_cap: f64,
) -> Result<HomotopyPath> {
    let mut n = beads.max(3);
    loop {
        let path: Vec<SurfaceMap> = crate::par::map_range(n, |k| {
            let th = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let s = if k == 0 { 1.0 } else if k == n - 1 { -1.0 } else { th.cos() };
            cap_at(mesh.clone(), &params.surface, h, axis, s)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        match HomotopyPath::new(path, params, spacing_cap) {
            Err(Error::BeadSpacing { .. }) if n < 4096 => n = 2 * n - 1,
            r => return r,
        }
    }
}

impl SurfaceMap {
    fn with_boundary_snapped(mut self, surface: &ImplicitSurface) -> Self {
        // exact circle positions; only rounding is removed here
        let _ = self.project_boundary(surface);
        self
    }
}

/// Straight-line homotopy from the constant map at `q ∈ Σ` to `u`, boundary
/// retracted onto `Σ`; beads are doubled until the spacing cap holds.
pub fn contraction_path(u: &SurfaceMap, params: &EnergyParams, q: &Vec3, spacing_cap: f64) -> Result<HomotopyPath> {
    let q = params.surface.closest_point(q)?;
    let mut n = 17;
    loop {
        let beads: Vec<SurfaceMap> = crate::par::map_range(n, |k| {
            let s = k as f64 / (n - 1) as f64;
            let positions = u.positions.iter().map(|p| q * (1.0 - s) + p * s).collect();
            let mut b = u.with_positions(positions)?;
            if k == n - 1 {
                return Ok(u.clone());
            }
            b.project_boundary(&params.surface)?;
            Ok(b)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        match HomotopyPath::new(beads, params, spacing_cap) {
            Err(Error::BeadSpacing { .. }) if n < 4096 => n = 2 * n - 1,
            r => return r,
        }
    }
}
