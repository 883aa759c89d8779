//! Run configuration: file + flag overrides, resolved and hashed.

use std::path::{Path, PathBuf};

use fbcmc::solver::{EpsilonSchedule, SolveConfig};
use fbcmc::surface::BarrierSpec;
use fbcmc::{EnergyParams, Forcing, ImplicitSurface, PrescribedCurvature, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Where artifacts go; not part of the reproducibility record.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub surface: SurfaceSection,
    pub barrier: BarrierSection,
    pub energy: EnergySection,
    pub mesh: MeshSection,
    pub init: InitSection,
    pub solver: SolverSection,
    pub schedule: ScheduleSection,
    pub minmax: MinmaxSection,
    pub spectrum: SpectrumSection,
    pub check: CheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            surface: SurfaceSection::default(),
            barrier: BarrierSection::default(),
            energy: EnergySection::default(),
            mesh: MeshSection::default(),
            init: InitSection::default(),
            solver: SolverSection::default(),
            schedule: ScheduleSection::default(),
            minmax: MinmaxSection::default(),
            spectrum: SpectrumSection::default(),
            check: CheckSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere,
    Ellipsoid,
}

/// `Σ`: a sphere (`radius`) or an axis-aligned ellipsoid (`axes`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub kind: SurfaceKind,
    pub center: [f64; 3],
    pub radius: f64,
    pub axes: [f64; 3],
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self { kind: SurfaceKind::Sphere, center: [0.0; 3], radius: 1.0, axes: [1.0; 3] }
    }
}

impl SurfaceSection {
    fn build(&self) -> fbcmc::Result<ImplicitSurface> {
        let c = Vec3::from(self.center);
        match self.kind {
            SurfaceKind::Sphere => ImplicitSurface::sphere(c, self.radius),
            SurfaceKind::Ellipsoid => ImplicitSurface::ellipsoid(c, Vec3::from(self.axes)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    /// `f ≡ H` everywhere.
    None,
    /// Cut-off `f` with the constraint surface as barrier.
    Sigma,
    /// Cut-off `f` with a separate ellipsoidal barrier.
    Ellipsoid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    pub kind: BarrierKind,
    pub center: [f64; 3],
    pub axes: [f64; 3],
}

impl Default for BarrierSection {
    fn default() -> Self {
        Self { kind: BarrierKind::None, center: [0.0; 3], axes: [1.0; 3] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    #[serde(rename = "H")]
    pub h: f64,
    pub eps: f64,
    pub p: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { h: 1.0, eps: 0.0, p: fbcmc::energy::DEFAULT_P }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub level: u32,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { level: 4 }
    }
}

/// `name` is `flat`, `cap`, `constant` or a path to an OBJ with a `.bnd`
/// sibling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    pub name: String,
    /// Amplitude of seeded noise added to the initial map.
    pub perturb: f64,
    /// Curvature of the `cap` initializer; defaults to the effective `H`.
    #[serde(rename = "cap_H", skip_serializing_if = "Option::is_none")]
    pub cap_h: Option<f64>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self { name: "cap".into(), perturb: 0.0, cap_h: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub min_step: f64,
    pub newton_switch_tol: f64,
    pub newton_shift: f64,
    pub eta_num: f64,
    pub beta_num: f64,
    pub mesh_tol_c: f64,
    pub checkpoint_every: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            initial_step: d.initial_step,
            armijo: d.armijo,
            backtrack: d.backtrack,
            min_step: d.min_step,
            newton_switch_tol: d.newton_switch_tol,
            newton_shift: d.newton_shift,
            eta_num: d.eta_num,
            beta_num: d.beta_num,
            mesh_tol_c: d.mesh_tol_c,
            checkpoint_every: d.checkpoint_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Eps,
    #[serde(rename = "H")]
    H,
}

/// `continue` schedule. For `kind = "eps"` an explicit `values` list wins
/// over the geometric `start/ratio/floor`; for `kind = "H"` `values` lists
/// the curvatures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    pub start: f64,
    pub ratio: f64,
    pub floor: f64,
    pub values: Vec<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { kind: ScheduleKind::Eps, start: 0.5, ratio: 0.5, floor: 1e-3, values: Vec::new() }
    }
}

impl ScheduleSection {
    pub fn eps_schedule(&self) -> EpsilonSchedule {
        if self.kind == ScheduleKind::Eps && !self.values.is_empty() {
            EpsilonSchedule::Explicit(self.values.clone())
        } else {
            EpsilonSchedule::Geometric { start: self.start, ratio: self.ratio, floor: self.floor }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinmaxSection {
    pub sweeps: usize,
    pub beads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bead_spacing: Option<f64>,
    /// Also run the width-versus-scale sweep.
    pub sweep: bool,
    pub r_grid: Vec<f64>,
    pub slope_bound: f64,
}

impl Default for MinmaxSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            sweeps: d.sweeps,
            beads: d.beads,
            bead_spacing: d.bead_spacing,
            sweep: false,
            r_grid: d.r_grid,
            slope_bound: d.slope_bound,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub k: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { k: fbcmc::spectrum::DEFAULT_K }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub quantization_pairs: usize,
    pub hopf_tol: f64,
    pub hersch_tol: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { quantization_pairs: 20, hopf_tol: 5e-2, hersch_tol: 1e-2 }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub h: Option<f64>,
    pub eps: Option<f64>,
    pub p: Option<f64>,
    pub level: Option<u32>,
    pub init: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
    pub hash: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error [config {}]: {}", self.hash, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Resolved, ConfigError> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
                    message: format!("cannot read {}: {e}", p.display()),
                    hash: sha256_hex(p.to_string_lossy().as_bytes())[..16].to_string(),
                })?;
                toml::from_str(&text).map_err(|e| ConfigError {
                    message: format!("cannot parse {}: {e}", p.display()),
                    hash: sha256_hex(text.as_bytes())[..16].to_string(),
                })?
            }
        };
        if let Some(v) = &ov.out {
            cfg.out = v.clone();
        }
        if let Some(v) = ov.seed {
            cfg.seed = v;
        }
        if let Some(v) = ov.h {
            cfg.energy.h = v;
        }
        if let Some(v) = ov.eps {
            cfg.energy.eps = v;
        }
        if let Some(v) = ov.p {
            cfg.energy.p = v;
        }
        if let Some(v) = ov.level {
            cfg.mesh.level = v;
        }
        if let Some(v) = &ov.init {
            cfg.init.name = v.clone();
        }
        cfg.resolve()
    }

    /// Hash of the canonical JSON echo.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))[..16].to_string()
    }

    pub fn solve_config(&self) -> SolveConfig {
        let s = &self.solver;
        SolveConfig {
            grad_tol: s.grad_tol,
            max_iters: s.max_iters,
            initial_step: s.initial_step,
            armijo: s.armijo,
            backtrack: s.backtrack,
            min_step: s.min_step,
            newton_switch_tol: s.newton_switch_tol,
            newton_shift: s.newton_shift,
            eta_num: s.eta_num,
            beta_num: s.beta_num,
            mesh_tol_c: s.mesh_tol_c,
            checkpoint_every: s.checkpoint_every,
            eps_schedule: self.schedule.eps_schedule(),
            r_grid: self.minmax.r_grid.clone(),
            slope_bound: self.minmax.slope_bound,
            sweeps: self.minmax.sweeps,
            beads: self.minmax.beads,
            bead_spacing: self.minmax.bead_spacing,
        }
    }

    fn resolve(self) -> Result<Resolved, ConfigError> {
        let hash = self.hash();
        let fail = |message: String| ConfigError { message, hash: hash.clone() };
        let surface = self.surface.build().map_err(|e| fail(format!("surface: {e}")))?;
        let barrier = match self.barrier.kind {
            BarrierKind::None | BarrierKind::Sigma => BarrierSpec::new(surface),
            BarrierKind::Ellipsoid => {
                let b = ImplicitSurface::ellipsoid(Vec3::from(self.barrier.center), Vec3::from(self.barrier.axes))
                    .map_err(|e| fail(format!("barrier: {e}")))?;
                let spec = BarrierSpec::new(b);
                spec.check_encloses(&surface).map_err(|e| fail(e.to_string()))?;
                spec
            }
        };
        let h = self.energy.h;
        if !(h >= 0.0 && h < barrier.h0) {
            return Err(fail(format!(
                "H = {h} violates the requirement 0 <= H < H0 = {:.6} (minimum mean curvature of the barrier)",
                barrier.h0
            )));
        }
        if self.schedule.kind == ScheduleKind::H {
            if let Some(&bad) = self.schedule.values.iter().find(|&&v| !(v >= 0.0 && v < barrier.h0)) {
                return Err(fail(format!("schedule H = {bad} violates the requirement 0 <= H < H0 = {:.6}", barrier.h0)));
            }
            if self.schedule.values.is_empty() {
                return Err(fail("H schedule needs a non-empty `values` list".into()));
            }
        }
        let forcing = match self.barrier.kind {
            BarrierKind::None => Forcing::Constant(h),
            _ => Forcing::Prescribed(PrescribedCurvature::new(barrier, h).map_err(|e| fail(e.to_string()))?),
        };
        let params = EnergyParams::new(surface, forcing, self.energy.eps, self.energy.p).map_err(|e| fail(e.to_string()))?;
        if !(1..=fbcmc::mesh::MAX_LEVEL).contains(&self.mesh.level) {
            return Err(fail(format!("mesh level must lie in 1..={}, got {}", fbcmc::mesh::MAX_LEVEL, self.mesh.level)));
        }
        if !(self.init.perturb >= 0.0 && self.init.perturb.is_finite()) {
            return Err(fail("init.perturb must be >= 0".into()));
        }
        let solve = self.solve_config();
        solve.validate().map_err(|e| fail(e.to_string()))?;
        Ok(Resolved { config: self, hash, params, solve })
    }
}

/// Validated config together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub hash: String,
    pub params: EnergyParams,
    pub solve: SolveConfig,
}

impl Resolved {
    /// Parameters with `f ≡ h` (or the cut-off at `h`) in place of `H`.
    pub fn params_at(&self, h: f64) -> fbcmc::Result<EnergyParams> {
        let forcing = match self.params.forcing {
            Forcing::Constant(_) => Forcing::Constant(h),
            Forcing::Prescribed(pc) => Forcing::Prescribed(PrescribedCurvature::new(pc.barrier, h)?),
        };
        Ok(EnergyParams { forcing, ..self.params })
    }
}
