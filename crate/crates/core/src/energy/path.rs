use std::sync::Arc;

use super::volume::{chart_directions, choose_pole, cone_volume, side_term};
use super::{penalized_dirichlet, EnergyParams, SurfaceMap};
use crate::error::{Error, Result};
use crate::par;

/// Exact change of `V` between two maps on the same mesh.
///
/// Both ends are evaluated on the branch of the side term fixed by a common
/// pole, which is valid as long as the boundary loops are close.
pub fn swept_volume_step(u0: &SurfaceMap, u1: &SurfaceMap, params: &EnergyParams) -> Result<f64> {
    let d0 = chart_directions(params, &u0.boundary_loop());
    let d1 = chart_directions(params, &u1.boundary_loop());
    let pole = choose_pole(&[&d0, &d1]);
    let margin = d0.iter().chain(&d1).map(|d| 1.0 + pole.dot(d)).fold(f64::INFINITY, f64::min);
    if margin < 1e-3 {
        return Err(Error::Path("boundary loops too far apart to share a pole".into()));
    }
    let c = cone_volume(u1, params)? - cone_volume(u0, params)?;
    Ok(c + side_term(u1, params, &pole) - side_term(u0, params, &pole))
}

/// Discrete homotopy: a finite sequence of maps ("beads") on one mesh.
#[derive(Debug, Clone)]
pub struct HomotopyPath {
    pub beads: Vec<SurfaceMap>,
}

impl HomotopyPath {
    /// Validate boundary constraints and the spacing cap.
    pub fn new(beads: Vec<SurfaceMap>, params: &EnergyParams, spacing_cap: f64) -> Result<Self> {
        if beads.len() < 2 {
            return Err(Error::Path("need at least two beads".into()));
        }
        let mesh = beads[0].mesh().clone();
        for b in &beads {
            if !Arc::ptr_eq(b.mesh(), &mesh) && b.len() != mesh.num_vertices() {
                return Err(Error::Path("beads live on different meshes".into()));
            }
            b.check_boundary(&params.surface)?;
        }
        let path = Self { beads };
        for (index, spacing) in path.spacings().into_iter().enumerate() {
            if spacing > spacing_cap {
                return Err(Error::BeadSpacing { index, spacing, cap: spacing_cap });
            }
        }
        Ok(path)
    }

    /// Default cap on bead spacing: 5% of the diameter of `Ω`.
    pub fn default_cap(params: &EnergyParams) -> f64 {
        0.05 * params.surface.diameter()
    }

    pub fn len(&self) -> usize {
        self.beads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beads.is_empty()
    }

    /// Largest vertex displacement between consecutive beads.
    pub fn spacings(&self) -> Vec<f64> {
        self.beads.windows(2).map(|w| w[0].max_distance(&w[1])).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut beads = self.beads.clone();
        beads.reverse();
        Self { beads }
    }

    /// Concatenate paths whose endpoints agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.beads.last().unwrap(), &other.beads[0]);
        if a.max_distance(b) > 1e-12 {
            return Err(Error::Path("endpoints do not match".into()));
        }
        let mut beads = self.beads.clone();
        beads.extend(other.beads[1..].iter().cloned());
        Ok(Self { beads })
    }

    /// Volume swept from the first bead up to each bead.
    pub fn cumulative_volume(&self, params: &EnergyParams) -> Result<Vec<f64>> {
        let steps = par::map_range(self.beads.len() - 1, |k| {
            swept_volume_step(&self.beads[k], &self.beads[k + 1], params)
        });
        let mut acc = vec![0.0];
        let mut v = 0.0;
        for s in steps {
            v += s?;
            acc.push(v);
        }
        Ok(acc)
    }

    /// Total swept volume.
    pub fn swept_volume(&self, params: &EnergyParams) -> Result<f64> {
        Ok(*self.cumulative_volume(params)?.last().unwrap())
    }

    /// `E` of each bead, with `V` measured along the path from the first bead.
    pub fn energies(&self, params: &EnergyParams) -> Result<Vec<f64>> {
        let vol = self.cumulative_volume(params)?;
        let d = par::map_slice(&self.beads, |b| penalized_dirichlet(b, params.eps, params.p));
        Ok(d.iter().zip(&vol).map(|(a, b)| a + b).collect())
    }
}
