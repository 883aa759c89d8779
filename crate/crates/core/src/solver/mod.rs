//! Critical-point solver, continuation, mountain pass and diagnostics.

mod concentration;
mod continuation;
pub mod init;
mod maxprinciple;
mod mountain;
mod quantization;

pub use concentration::{detect_concentration, local_energy_max, ConcentrationReport};
pub use continuation::{continue_epsilon, ContinuationStage, EpsilonSchedule};
pub use quantization::{quantization_check, QuantizationReport, QUANTIZATION_TOL};
pub use maxprinciple::{check_max_principle, MaxPrincipleReport, MaxPrincipleStatus};
pub use mountain::{
    effective_curvature, monotonicity_sweep, mountain_pass, MonotonicityRow, MountainPassReport,
};

use serde::Serialize;

use crate::energy::{
    dirichlet, hopf_defect, local_energy, nodal_gradient, penalized_dirichlet, residual,
    swept_volume_step, EnergyParams, EnergyReport, Residual, SurfaceMap,
};
use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, BandLu, Csr};
use crate::spectrum::assemble_second_variation;
use crate::surface::PROJECTION_TOL;
use crate::Vec3;

/// Solver knobs.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    /// Converged when the residual norm is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// First trial step of the gradient phase.
    pub initial_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub backtrack: f64,
    /// Smallest step before the line search gives up.
    pub min_step: f64,
    /// Newton steps are attempted once the residual is below this.
    pub newton_switch_tol: f64,
    /// Mass shift `μ` in `(A + μM) δ = -g`.
    pub newton_shift: f64,
    /// Concentration threshold `η_num`.
    pub eta_num: f64,
    /// Constancy threshold `β_num`.
    pub beta_num: f64,
    /// `mesh_tol = C h²` in the confinement check.
    pub mesh_tol_c: f64,
    /// Emit a checkpoint every this many iterations (0 = never).
    pub checkpoint_every: usize,
    pub eps_schedule: EpsilonSchedule,
    /// Scales `r` of the monotonicity sweep.
    pub r_grid: Vec<f64>,
    /// Grid points with `-(ω/r)'` above this are flagged.
    pub slope_bound: f64,
    /// Mountain pass: number of sweeps, seed bead count, spacing cap
    /// (`None`: 5% of the diameter of `Ω`).
    pub sweeps: usize,
    pub beads: usize,
    pub bead_spacing: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 400,
            initial_step: 1.0,
            armijo: 1e-4,
            backtrack: 0.5,
            min_step: 1e-12,
            newton_switch_tol: 10.0,
            newton_shift: 1e-8,
            eta_num: 0.05,
            beta_num: 1e-4,
            mesh_tol_c: 1.0,
            checkpoint_every: 0,
            eps_schedule: EpsilonSchedule::default(),
            r_grid: vec![0.5, 0.625, 0.75, 0.875, 1.0],
            slope_bound: 50.0,
            sweeps: 30,
            beads: 33,
            bead_spacing: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("armijo", self.armijo),
            ("min_step", self.min_step),
            ("newton_switch_tol", self.newton_switch_tol),
            ("newton_shift", self.newton_shift),
            ("eta_num", self.eta_num),
            ("beta_num", self.beta_num),
            ("mesh_tol_c", self.mesh_tol_c),
            ("slope_bound", self.slope_bound),
            ("bead_spacing", self.bead_spacing.unwrap_or(1.0)),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtrack must lie in (0, 1)".into()));
        }
        if self.beads < 3 {
            return Err(Error::InvalidParameter("need at least three beads".into()));
        }
        self.eps_schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Gradient,
    Newton,
}

/// One accepted iteration.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `D_{ε,p} + V`, with `V` tracked incrementally from the initial map.
    pub energy: f64,
    pub dirichlet: f64,
    pub residual: f64,
    pub step: f64,
    pub orth_defect: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Nonconstant,
    ConstantCollapse,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub orthogonality_defect: f64,
    pub energy: Option<EnergyReport>,
    pub hopf_defect: f64,
    pub label: Option<Label>,
    pub max_principle: Option<MaxPrincipleReport>,
    pub morse_index: Option<usize>,
    pub concentration: Option<ConcentrationReport>,
    pub history: Vec<IterationRecord>,
}

/// Iteration hook: `(iteration, current map)`.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &SurfaceMap);

/// `(K₀ + M)⁻¹` on scalar nodal fields.
pub(crate) struct Preconditioner(BandCholesky);

impl Preconditioner {
    pub(crate) fn new(u: &SurfaceMap) -> Result<Self> {
        let mesh = u.mesh();
        let k = mesh.stiffness().add_diag(1.0, mesh.lumped_mass());
        Ok(Self(BandCholesky::factor(&k)?))
    }

    /// `-P⁻¹ g_T` with boundary rows projected onto `TΣ`.
    pub(crate) fn direction(&self, u: &SurfaceMap, params: &EnergyParams, tangential: &[Vec3]) -> Vec<Vec3> {
        let n = u.len();
        let mut d = vec![Vec3::zeros(); n];
        for c in 0..3 {
            let rhs: Vec<f64> = tangential.iter().map(|g| -g[c]).collect();
            for (i, x) in self.0.solve(&rhs).into_iter().enumerate() {
                d[i][c] = x;
            }
        }
        for &b in &u.mesh().boundary {
            let nb = params.surface.outward_normal(&u.positions[b]);
            let c = nb.dot(&d[b]);
            d[b] -= nb * c;
        }
        d
    }
}

/// Boundary rows of `g` projected onto `TΣ`.
pub(crate) fn tangential(u: &SurfaceMap, params: &EnergyParams, g: &[Vec3]) -> Vec<Vec3> {
    let mut t = g.to_vec();
    for &b in &u.mesh().boundary {
        let n = params.surface.outward_normal(&u.positions[b]);
        t[b] -= n * n.dot(&g[b]);
    }
    t
}

/// `u + d` with boundary vertices retracted onto `Σ`.
pub(crate) fn retract(u: &SurfaceMap, params: &EnergyParams, d: &[Vec3], alpha: f64) -> Result<SurfaceMap> {
    let mut positions: Vec<Vec3> = u.positions.iter().zip(d).map(|(p, q)| p + q * alpha).collect();
    for &b in &u.mesh().boundary {
        positions[b] = params.surface.closest_point(&positions[b])?;
    }
    u.with_positions(positions)
}

/// `E(v) - E(u)` for nearby maps.
pub(crate) fn energy_change(u: &SurfaceMap, v: &SurfaceMap, params: &EnergyParams) -> Result<f64> {
    let dd = penalized_dirichlet(v, params.eps, params.p) - penalized_dirichlet(u, params.eps, params.p);
    Ok(dd + swept_volume_step(u, v, params)?)
}

fn dot3(a: &[Vec3], b: &[Vec3]) -> f64 {
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.dot(y)).collect();
    crate::par::tree_sum(&v)
}

/// One Armijo-backtracked projected gradient step.
pub(crate) fn gradient_step(
    u: &SurfaceMap,
    params: &EnergyParams,
    pre: &Preconditioner,
    g: &[Vec3],
    alpha0: f64,
    cfg: &SolveConfig,
) -> Result<Option<(SurfaceMap, f64, f64)>> {
    let gt = tangential(u, params, g);
    let d = pre.direction(u, params, &gt);
    let slope = dot3(&gt, &d);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut alpha = alpha0;
    while alpha >= cfg.min_step {
        if let Ok(v) = retract(u, params, &d, alpha) {
            if let Ok(de) = energy_change(u, &v, params) {
                if de.is_finite() && de <= cfg.armijo * alpha * slope {
                    return Ok(Some((v, alpha, de)));
                }
            }
        }
        alpha *= cfg.backtrack;
    }
    Ok(None)
}

/// Newton step on the reduced system with residual-norm backtracking.
fn newton_step(
    u: &SurfaceMap,
    params: &EnergyParams,
    res: &Residual,
    cfg: &SolveConfig,
) -> Result<Option<(SurfaceMap, f64, Residual)>> {
    let sys = match assemble_second_variation(u, params) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    let rhs: Vec<f64> = sys.dofs.restrict(&res.gradient).iter().map(|x| -x).collect();
    let mut mu = cfg.newton_shift;
    for _ in 0..4 {
        let a: Csr = sys.a.add_diag(mu, &sys.mass);
        if let Ok(lu) = BandLu::factor(&a) {
            let delta = sys.dofs.embed(&lu.solve(&rhs));
            let mut alpha = 1.0;
            for _ in 0..12 {
                if let Ok(v) = retract(u, params, &delta, alpha) {
                    if let Ok(r) = residual(&v, params) {
                        if r.norm.is_finite() && r.norm < (1.0 - 1e-4 * alpha) * res.norm {
                            return Ok(Some((v, alpha, r)));
                        }
                    }
                }
                alpha *= 0.5;
            }
        }
        mu *= 100.0;
    }
    Ok(None)
}

fn is_constant(u: &SurfaceMap) -> bool {
    u.positions.iter().all(|p| (p - u.positions[0]).norm() == 0.0)
}

/// Critical point of `E` by projected gradient descent and Newton.
pub fn solve_critical_point(
    u0: &SurfaceMap,
    params: &EnergyParams,
    cfg: &SolveConfig,
) -> Result<(SurfaceMap, SolveReport)> {
    solve_critical_point_observed(u0, params, cfg, &mut |_, _| {})
}

pub fn solve_critical_point_observed(
    u0: &SurfaceMap,
    params: &EnergyParams,
    cfg: &SolveConfig,
    observer: Observer,
) -> Result<(SurfaceMap, SolveReport)> {
    cfg.validate()?;
    let mut u = u0.clone();
    u.check_boundary(&params.surface)?;
    let pre = Preconditioner::new(&u)?;
    let mut report = SolveReport::default();
    let mut work = penalized_dirichlet(&u, params.eps, params.p);
    let mut alpha = cfg.initial_step;
    let mut res = residual(&u, params)?;
    let mut step = 0.0;
    let mut phase = Phase::Gradient;
    let constant_start = is_constant(&u);
    for iter in 0..=cfg.max_iters {
        report.history.push(IterationRecord {
            iter,
            energy: work,
            dirichlet: dirichlet(&u),
            residual: res.norm,
            step,
            orth_defect: res.orthogonality_defect,
            phase,
        });
        if cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 {
            observer(iter, &u);
        }
        if !res.norm.is_finite() {
            return Err(fail(report, &u, params, cfg, "divergence: non-finite residual"));
        }
        if res.norm <= cfg.grad_tol || (constant_start && res.norm == 0.0) {
            report.converged = true;
            report.iterations = iter;
            finish(&mut report, &u, params, &res, cfg)?;
            return Ok((u, report));
        }
        if iter == cfg.max_iters {
            break;
        }
        if res.norm <= cfg.newton_switch_tol {
            if let Some((v, a, r)) = newton_step(&u, params, &res, cfg)? {
                work += energy_change(&u, &v, params)?;
                u = v;
                res = r;
                step = a;
                phase = Phase::Newton;
                continue;
            }
        }
        match gradient_step(&u, params, &pre, &res.gradient, (2.0 * alpha).min(4.0 * cfg.initial_step), cfg)? {
            Some((v, a, de)) => {
                work += de;
                u = v;
                alpha = a;
                step = a;
                phase = Phase::Gradient;
                res = residual(&u, params)?;
            }
            None => {
                return Err(fail(report, &u, params, cfg, "divergence: line search failed"));
            }
        }
    }
    report.iterations = cfg.max_iters;
    Err(fail(report, &u, params, cfg, "max_iters exceeded"))
}

fn finish(
    report: &mut SolveReport,
    u: &SurfaceMap,
    params: &EnergyParams,
    res: &Residual,
    cfg: &SolveConfig,
) -> Result<()> {
    report.residual = res.norm;
    report.orthogonality_defect = res.orthogonality_defect;
    let pole = crate::energy::default_pole(u, params);
    let e = local_energy(u, params, &pole)?;
    report.label = Some(if e.dirichlet < cfg.beta_num { Label::ConstantCollapse } else { Label::Nonconstant });
    report.energy = Some(e);
    report.hopf_defect = hopf_defect(u);
    report.max_principle = Some(check_max_principle(u, params, cfg.mesh_tol_c)?);
    for &b in &u.mesh().boundary {
        debug_assert!(params.surface.level(&u.positions[b]).abs() <= 1e3 * PROJECTION_TOL);
    }
    Ok(())
}

fn fail(mut report: SolveReport, u: &SurfaceMap, params: &EnergyParams, cfg: &SolveConfig, reason: &str) -> Error {
    if let Ok(res) = residual(u, params) {
        let _ = finish(&mut report, u, params, &res, cfg);
    }
    report.converged = false;
    Error::Solve { reason: reason.to_string(), report: Box::new(report) }
}

/// Nodal gradient re-exported for diagnostics.
pub fn gradient(u: &SurfaceMap, params: &EnergyParams) -> Result<Vec<Vec3>> {
    nodal_gradient(u, params)
}
