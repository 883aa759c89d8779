//! Maps, energies, the volume functional and homotopy paths.

mod functional;
pub(crate) mod jet;
mod map;
mod path;
mod volume;

pub use functional::{
    dirichlet, energy_density, first_variation, hopf_defect, local_energy, nodal_gradient,
    penalized_dirichlet, residual, triangle_hessian, vertex_mean_curvature, EnergyReport, Residual,
};
pub use map::SurfaceMap;
pub use path::{swept_volume_step, HomotopyPath};
pub use volume::{
    choose_pole, cone_volume, default_pole, side_term, volume_function, volume_gradient,
    volume_hessian_edges, VolumeField,
};

use crate::error::{Error, Result};
use crate::surface::{ImplicitSurface, PrescribedCurvature};
use crate::Vec3;

/// Default exponent of the perturbation term.
pub const DEFAULT_P: f64 = 2.2;

/// Source of the prescribed mean curvature `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// `f ≡ H`.
    Constant(f64),
    /// `f = H` near the barrier region, cut off smoothly outside it.
    Prescribed(PrescribedCurvature),
}

/// Parameters of `E = D_{ε,p} + r·V_f` on maps with boundary on `surface`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub eps: f64,
    pub p: f64,
    /// Overall multiplier `r` of the forcing.
    pub scale: f64,
    pub forcing: Forcing,
    pub surface: ImplicitSurface,
}

impl EnergyParams {
    pub fn new(surface: ImplicitSurface, forcing: Forcing, eps: f64, p: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
        }
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must exceed 2, got {p}")));
        }
        Ok(Self { eps, p, scale: 1.0, forcing, surface })
    }

    /// Constant mean curvature `H` on the unit sphere, `ε = 0`.
    pub fn unit_ball(h: f64) -> Self {
        Self {
            eps: 0.0,
            p: DEFAULT_P,
            scale: 1.0,
            forcing: Forcing::Constant(h),
            surface: ImplicitSurface::unit_sphere(),
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_scale(mut self, r: f64) -> Self {
        self.scale = r;
        self
    }

    /// `ε^{p-2}` (zero when `ε = 0`).
    pub fn eps_factor(&self) -> f64 {
        if self.eps == 0.0 {
            0.0
        } else {
            self.eps.powf(self.p - 2.0)
        }
    }

    /// Value of `f` on the enclosed region, times the scale.
    pub fn interior_value(&self) -> f64 {
        self.scale
            * match self.forcing {
                Forcing::Constant(h) => h,
                Forcing::Prescribed(pc) => pc.h,
            }
    }

    /// `∫_Ω f` over the region bounded by the constraint surface.
    pub fn enclosed_integral(&self) -> f64 {
        self.interior_value() * self.surface.volume()
    }

    /// `(f, ∇f, ∇²f)` at `y`.
    pub fn f_jet(&self, y: &Vec3) -> Result<(f64, Vec3, crate::Mat3)> {
        match self.forcing {
            Forcing::Constant(h) => Ok((self.scale * h, Vec3::zeros(), crate::Mat3::zeros())),
            Forcing::Prescribed(pc) => {
                let (f, g, h) = pc.jet(y)?;
                Ok((self.scale * f, g * self.scale, h * self.scale))
            }
        }
    }
}
