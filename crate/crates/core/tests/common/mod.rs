#![allow(dead_code)]

use std::sync::Arc;

use fbcmc::energy::SurfaceMap;
use fbcmc::solver::init;
use fbcmc::surface::BarrierSpec;
use fbcmc::{DiskMesh, EnergyParams, Forcing, ImplicitSurface, PrescribedCurvature, Vec3};

pub fn mesh(level: u32) -> Arc<DiskMesh> {
    Arc::new(DiskMesh::build(level).unwrap())
}

/// A generic admissible map: a bent, tilted disk with boundary on the unit
/// sphere, plus seeded noise.
pub fn random_map(level: u32, seed: u64) -> SurfaceMap {
    let mut u = SurfaceMap::from_fn(mesh(level), |x| {
        Vec3::new(0.85 * x[0] + 0.1 * x[1] * x[1], 0.9 * x[1] - 0.05 * x[0], 0.25 * x[0] * x[1] + 0.15)
    });
    let s = ImplicitSurface::unit_sphere();
    u.project_boundary(&s).unwrap();
    init::perturbed(&u, &s, 0.02, seed).unwrap()
}

/// `f = H` cut off outside a neighbourhood of the unit ball.
pub fn prescribed(h: f64, eps: f64) -> EnergyParams {
    let s = ImplicitSurface::unit_sphere();
    let pc = PrescribedCurvature::new(BarrierSpec::new(s), h).unwrap();
    EnergyParams::new(s, Forcing::Prescribed(pc), eps, 2.2).unwrap()
}

/// `u + tψ` with boundary vertices retracted onto `Σ`.
pub fn retract(u: &SurfaceMap, params: &EnergyParams, psi: &[Vec3], t: f64) -> SurfaceMap {
    let mut v = u.with_positions(u.positions.iter().zip(psi).map(|(p, d)| p + d * t).collect()).unwrap();
    v.project_boundary(&params.surface).unwrap();
    v
}

/// `ψ` with boundary rows projected onto `TΣ` at the vertices of `u`.
pub fn tangential(u: &SurfaceMap, params: &EnergyParams, psi: &[Vec3]) -> Vec<Vec3> {
    let mut out = psi.to_vec();
    for &b in &u.mesh().boundary {
        let n = params.surface.outward_normal(&u.positions[b]);
        let c = n.dot(&out[b]);
        out[b] -= n * c;
    }
    out
}

pub fn cap_area(h: f64) -> f64 {
    // sphere of radius ρ = 2/H meeting the unit sphere orthogonally:
    // centre distance d = √(1 + ρ²), cap height ρ - (d² + ρ² - 1)/(2d)
    let rho = 2.0 / h;
    let d = (1.0 + rho * rho).sqrt();
    let height = rho - (d * d + rho * rho - 1.0) / (2.0 * d);
    2.0 * std::f64::consts::PI * rho * height
}

/// [`random_map`] pushed outwards so that interior vertices reach the
/// transition band of a cut-off `f`.
pub fn bulging_map(level: u32, seed: u64) -> SurfaceMap {
    let u = random_map(level, seed);
    let m = u.mesh().clone();
    let positions = u
        .positions
        .iter()
        .zip(&m.vertices)
        .map(|(p, x)| p + Vec3::new(0.0, 0.0, 1.0 - x[0] * x[0] - x[1] * x[1]))
        .collect();
    u.with_positions(positions).unwrap()
}
