//! Free-boundary constant-mean-curvature disks in a ball-like region.
//!
//! A disk-type map `u: B -> R^3` with `u(∂B) ⊂ Σ` is discretized by piecewise
//! linear elements on a refined unit disk. The crate provides the energies
//! `E_H` and their `ε`-perturbations, a projected critical-point solver,
//! `ε`-continuation, a string-method mountain pass over sweepouts, and the
//! spectral checks used to certify benchmark solutions.

pub mod energy;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod solver;
pub mod spectrum;
pub mod surface;

pub use energy::{EnergyParams, Forcing, HomotopyPath, SurfaceMap};
pub use error::{Error, Result};
pub use mesh::DiskMesh;
pub use surface::{BarrierSpec, ImplicitSurface, PrescribedCurvature};

/// Three-vectors used throughout.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrices used throughout.
pub type Mat3 = nalgebra::Matrix3<f64>;
