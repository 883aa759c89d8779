use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::init::{cap_sweepout, contraction_path};
use crate::energy::{choose_pole, EnergyParams, HomotopyPath, SurfaceMap};
use crate::error::{Error, Result};
use crate::Vec3;

/// Volume differences of random path pairs ending at one map.
#[derive(Debug, Clone, Serialize)]
pub struct QuantizationReport {
    /// `(V(γ) - V(γ̃)) / ∫_Ω f` per pair.
    pub ratios: Vec<f64>,
    /// Number of full sweepouts prepended to each path of a pair.
    pub windings: Vec<(i32, i32)>,
    /// Largest distance of a ratio to the nearest integer.
    pub max_residue: f64,
    pub pass: bool,
}

/// Tolerance on the distance of volume ratios to the integers.
pub const QUANTIZATION_TOL: f64 = 0.01;

/// Random path from a constant map to `u`: a contraction from a point near
/// the best-conditioned pole, preceded by `winding ∈ {-1, 0, 1}` cap
/// sweepouts (spherical `Σ` only).
fn random_path(u: &SurfaceMap, params: &EnergyParams, rng: &mut ChaCha8Rng, winding: i32, cap: f64) -> Result<HomotopyPath> {
    let surf = &params.surface;
    let dirs: Vec<Vec3> = u.boundary_loop().iter().map(|y| surf.to_unit(y).normalize()).collect();
    let pole = choose_pole(&[&dirs]);
    let jitter = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let q = surf.from_unit(&(pole + jitter).normalize());
    let tail = contraction_path(u, params, &q, cap)?;
    if winding == 0 {
        return Ok(tail);
    }
    let a = surf.to_unit(&q).normalize();
    let h = super::effective_curvature(params).abs().min(1.0 / surf.axes()[0]);
    // sweep(−a) runs from −a to a; sweep(a) reversed also ends at a
    let sweep = if winding > 0 {
        cap_sweepout(u.mesh().clone(), params, h, &-a, 17, cap)?
    } else {
        cap_sweepout(u.mesh().clone(), params, h, &a, 17, cap)?.reversed()
    };
    let mut beads = sweep.beads;
    beads.pop();
    beads.extend(tail.beads);
    Ok(HomotopyPath { beads })
}

/// Volume quantization: `V(γ) - V(γ̃) ∈ (∫_Ω f) ℤ` for paths from
/// constants to `u`.
pub fn quantization_check(u: &SurfaceMap, params: &EnergyParams, pairs: usize, seed: u64) -> Result<QuantizationReport> {
    let total = params.enclosed_integral();
    if total == 0.0 {
        return Err(Error::InvalidParameter("quantization needs a nonzero enclosed integral of f".into()));
    }
    let cap = HomotopyPath::default_cap(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sphere = params.surface.is_sphere();
    let mut ratios = Vec::with_capacity(pairs);
    let mut windings = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let (w1, w2) = if sphere { (rng.random_range(-1..=1), rng.random_range(-1..=1)) } else { (0, 0) };
        let g1 = random_path(u, params, &mut rng, w1, cap)?;
        let g2 = random_path(u, params, &mut rng, w2, cap)?;
        ratios.push((g1.swept_volume(params)? - g2.swept_volume(params)?) / total);
        windings.push((w1, w2));
    }
    let max_residue = ratios.iter().map(|r| (r - r.round()).abs()).fold(0.0, f64::max);
    Ok(QuantizationReport { ratios, windings, max_residue, pass: max_residue <= QUANTIZATION_TOL })
}
