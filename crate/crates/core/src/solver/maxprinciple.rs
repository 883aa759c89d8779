use serde::Serialize;

use crate::energy::{EnergyParams, Forcing, SurfaceMap};
use crate::error::Result;
use crate::surface::{choose_t0, BarrierSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxPrincipleStatus {
    /// Within `t₀ + mesh_tol` of the barrier region.
    PassA,
    /// Within `mesh_tol` of the barrier region.
    PassB,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    /// Largest vertex distance outside the barrier region.
    pub max_distance: f64,
    pub t0: f64,
    pub mesh_tol: f64,
    pub status: MaxPrincipleStatus,
}

impl MaxPrincipleReport {
    pub fn passed(&self) -> bool {
        self.status != MaxPrincipleStatus::Fail
    }
}

/// Confinement of `u` to the barrier region (or to `Ω` itself when `f` is
/// constant), with `mesh_tol = C h²`.
pub fn check_max_principle(u: &SurfaceMap, params: &EnergyParams, c: f64) -> Result<MaxPrincipleReport> {
    let (barrier, t0) = match params.forcing {
        Forcing::Prescribed(pc) => (pc.barrier, pc.t0),
        Forcing::Constant(h) => {
            let b = BarrierSpec::new(params.surface);
            let t0 = choose_t0(&b, (h * params.scale).abs()).unwrap_or(0.0);
            (b, t0)
        }
    };
    let h = u.mesh().h();
    let mesh_tol = c * h * h;
    let dists = crate::par::map_slice(&u.positions, |y| barrier.surface.outside_distance_jet(y).map(|j| j.0));
    let mut max_distance: f64 = 0.0;
    for d in dists {
        max_distance = max_distance.max(d?);
    }
    let status = if max_distance <= mesh_tol {
        MaxPrincipleStatus::PassB
    } else if max_distance <= t0 + mesh_tol {
        MaxPrincipleStatus::PassA
    } else {
        MaxPrincipleStatus::Fail
    };
    Ok(MaxPrincipleReport { max_distance, t0, mesh_tol, status })
}
