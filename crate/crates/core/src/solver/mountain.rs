use std::sync::Arc;

use serde::Serialize;

use super::init::cap_sweepout;
use super::{gradient_step, solve_critical_point, Preconditioner, SolveConfig, SolveReport};
use crate::energy::{dirichlet, residual, EnergyParams, HomotopyPath, SurfaceMap};
use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::Vec3;

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassReport {
    /// `ω_num`: the largest bead energy of the final path (an upper bound
    /// for the min-max level of the discrete problem).
    pub omega: f64,
    /// Largest bead energy before the first sweep and after each sweep.
    pub sweep_maxima: Vec<f64>,
    pub sweeps: usize,
    pub beads: usize,
    /// `V(path) / ∫_Ω f` of the seed.
    pub degree_ratio: f64,
    /// Residual of the raw max bead when the sweeps stopped.
    pub max_bead_residual: f64,
    /// Sweeps whose arc-length reparametrization raised the maximum and was
    /// therefore skipped.
    pub skipped_reparametrizations: usize,
    /// Bead steps undone to keep the spacing cap.
    pub reverted_steps: usize,
    /// Newton polish of the max bead.
    pub polish: SolveReport,
    pub polished: bool,
    /// `E` of the returned max slice, with `V` measured along the path.
    pub slice_energy: f64,
    pub slice_dirichlet: f64,
}

/// `‖a - b‖_M`.
fn l2_distance(a: &SurfaceMap, b: &SurfaceMap) -> f64 {
    let m = a.mesh().lumped_mass();
    let v: Vec<f64> = a
        .positions
        .iter()
        .zip(&b.positions)
        .zip(m)
        .map(|((x, y), w)| w * (x - y).norm_squared())
        .collect();
    crate::par::tree_sum(&v).sqrt()
}

fn interpolate(a: &SurfaceMap, b: &SurfaceMap, s: f64, params: &EnergyParams) -> Result<SurfaceMap> {
    let mut u = a.lerp(b, s);
    u.project_boundary(&params.surface)?;
    Ok(u)
}

/// Equal `L²` arc-length spacing with the same number of beads.
fn reparametrize(beads: &[SurfaceMap], params: &EnergyParams) -> Result<Vec<SurfaceMap>> {
    let n = beads.len();
    let seg: Vec<f64> = beads.windows(2).map(|w| l2_distance(&w[0], &w[1])).collect();
    let mut cum = vec![0.0];
    for s in &seg {
        cum.push(cum[cum.len() - 1] + s);
    }
    let total = cum[n - 1];
    if total == 0.0 {
        return Ok(beads.to_vec());
    }
    let mut out = vec![beads[0].clone()];
    let mut k = 0;
    for j in 1..n - 1 {
        let target = total * j as f64 / (n - 1) as f64;
        while k + 1 < n - 1 && cum[k + 1] < target {
            k += 1;
        }
        let s = if seg[k] > 0.0 { ((target - cum[k]) / seg[k]).clamp(0.0, 1.0) } else { 0.0 };
        out.push(interpolate(&beads[k], &beads[k + 1], s, params)?);
    }
    out.push(beads[n - 1].clone());
    Ok(out)
}

/// Revert moved beads (highest index first among offenders) until every
/// spacing respects the cap; the unmoved path is admissible, so this ends.
fn enforce_spacing(old: &[SurfaceMap], new: &mut [SurfaceMap], moved: &mut [bool], cap: f64) -> usize {
    let mut reverted = 0;
    loop {
        let bad = (0..new.len() - 1).find(|&k| new[k].max_distance(&new[k + 1]) > cap);
        let Some(k) = bad else { return reverted };
        let j = if moved[k + 1] { k + 1 } else { k };
        debug_assert!(moved[j]);
        new[j] = old[j].clone();
        moved[j] = false;
        reverted += 1;
    }
}

fn within_cap(beads: &[SurfaceMap], cap: f64) -> bool {
    beads.windows(2).all(|w| w[0].max_distance(&w[1]) <= cap)
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &x)| if x > a.1 { (i, x) } else { a })
}

/// String-method relaxation of a sweepout, followed by a Newton polish of the
/// highest bead.
pub fn mountain_pass(
    path0: &HomotopyPath,
    params: &EnergyParams,
    cfg: &SolveConfig,
) -> Result<(HomotopyPath, SurfaceMap, MountainPassReport)> {
    cfg.validate()?;
    let cap = cfg.bead_spacing.unwrap_or_else(|| HomotopyPath::default_cap(params));
    let path = HomotopyPath::new(path0.beads.clone(), params, cap)?;
    for end in [&path.beads[0], &path.beads[path.len() - 1]] {
        if dirichlet(end) >= cfg.beta_num {
            return Err(Error::Path("sweepout must start and end at constant maps".into()));
        }
    }
    let total = params.enclosed_integral();
    if total == 0.0 {
        return Err(Error::InvalidParameter("degree check needs a nonzero enclosed integral of f".into()));
    }
    let degree_ratio = path.swept_volume(params)? / total;
    if (degree_ratio - 1.0).abs() > 0.25 {
        return Err(Error::Degree { ratio: degree_ratio });
    }

    let pre = Preconditioner::new(&path.beads[0])?;
    let mut beads = path.beads;
    let mut energies = HomotopyPath { beads: beads.clone() }.energies(params)?;
    let mut maxima = vec![argmax(&energies).1];
    let mut alphas = vec![cfg.initial_step; beads.len()];
    let mut skipped = 0;
    let mut reverted = 0;
    let mut max_res = f64::INFINITY;
    let mut sweeps = 0;
    for _ in 0..cfg.sweeps {
        let prev_max = maxima[maxima.len() - 1];
        let (imax, _) = argmax(&energies);
        max_res = residual(&beads[imax], params)?.norm;
        if max_res <= cfg.grad_tol {
            break;
        }
        sweeps += 1;
        let n = beads.len();
        let results = crate::par::map_range(n, |k| -> Result<(SurfaceMap, f64, bool)> {
            if k == 0 || k == n - 1 {
                return Ok((beads[k].clone(), alphas[k], false));
            }
            let g = crate::energy::nodal_gradient(&beads[k], params)?;
            let a0 = (2.0 * alphas[k]).min(4.0 * cfg.initial_step);
            Ok(match gradient_step(&beads[k], params, &pre, &g, a0, cfg)? {
                Some((v, a, _)) => (v, a, true),
                None => (beads[k].clone(), alphas[k] * cfg.backtrack, false),
            })
        });
        let mut stepped = Vec::with_capacity(n);
        let mut moved = Vec::with_capacity(n);
        for (k, r) in results.into_iter().enumerate() {
            let (b, a, m) = r?;
            stepped.push(b);
            alphas[k] = a.max(cfg.min_step);
            moved.push(m);
        }
        reverted += enforce_spacing(&beads, &mut stepped, &mut moved, cap);
        let stepped_e = HomotopyPath { beads: stepped.clone() }.energies(params)?;
        let candidate = reparametrize(&stepped, params)?;
        let tol = 1e-12 * (1.0 + prev_max.abs());
        let mut accepted = None;
        if within_cap(&candidate, cap) {
            let cand_e = HomotopyPath { beads: candidate.clone() }.energies(params)?;
            if argmax(&cand_e).1 <= prev_max + tol {
                accepted = Some((candidate, cand_e));
            }
        }
        let (next, next_e) = accepted.unwrap_or_else(|| {
            skipped += 1;
            (stepped, stepped_e)
        });
        beads = next;
        energies = next_e;
        maxima.push(argmax(&energies).1);
    }
    let (imax, omega) = argmax(&energies);
    if sweeps == cfg.sweeps {
        max_res = residual(&beads[imax], params)?.norm;
    }
    let raw = beads[imax].clone();
    let (slice, polish, polished) = match solve_critical_point(&raw, params, cfg) {
        Ok((u, r)) => (u, r, true),
        Err(Error::Solve { report, .. }) => (raw.clone(), *report, false),
        Err(e) => return Err(e),
    };
    let slice_dirichlet = dirichlet(&slice);
    if slice_dirichlet < cfg.beta_num {
        return Err(Error::Solve {
            reason: "max-slice collapse below beta_num: trivial path".into(),
            report: Box::new(polish),
        });
    }
    let slice_energy = energies[imax] + super::energy_change(&raw, &slice, params).unwrap_or(f64::NAN);
    let report = MountainPassReport {
        omega,
        sweep_maxima: maxima,
        sweeps,
        beads: beads.len(),
        degree_ratio,
        max_bead_residual: max_res,
        skipped_reparametrizations: skipped,
        reverted_steps: reverted,
        polish,
        polished,
        slice_energy,
        slice_dirichlet,
    };
    Ok((HomotopyPath { beads }, slice, report))
}

/// Mean curvature the cap family should carry so that its members are close
/// to critical for `D_{ε,p}`: `H / (1 + ε^{p-2} 3^{p/2-1})`.
pub fn effective_curvature(params: &EnergyParams) -> f64 {
    params.interior_value() / (1.0 + params.eps_factor() * 3f64.powf(params.p / 2.0 - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityRow {
    pub r: f64,
    pub omega: Option<f64>,
    pub omega_over_r: Option<f64>,
    /// Forward difference of `ω/r` to the next grid point.
    pub slope: Option<f64>,
    /// `-(ω/r)'` exceeds the configured bound.
    pub flagged: bool,
    pub error: Option<String>,
}

/// `ω_num(r)/r` on `cfg.r_grid`, seeded by cap sweepouts along `e₃`.
pub fn monotonicity_sweep(mesh: Arc<DiskMesh>, params: &EnergyParams, cfg: &SolveConfig) -> Result<Vec<MonotonicityRow>> {
    if cfg.r_grid.is_empty() || cfg.r_grid.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidParameter("r-grid must be a non-empty subset of (0, 1]".into()));
    }
    let mut grid = cfg.r_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let omegas = crate::par::map_slice(&grid, |&r| -> Result<f64> {
        let p = params.with_scale(params.scale * r);
        let cap = cfg.bead_spacing.unwrap_or_else(|| HomotopyPath::default_cap(&p));
        let seed = cap_sweepout(mesh.clone(), &p, effective_curvature(&p), &Vec3::z(), cfg.beads, cap)?;
        Ok(mountain_pass(&seed, &p, cfg)?.2.omega)
    });
    let mut rows: Vec<MonotonicityRow> = grid
        .iter()
        .zip(omegas)
        .map(|(&r, o)| match o {
            Ok(w) => MonotonicityRow { r, omega: Some(w), omega_over_r: Some(w / r), slope: None, flagged: false, error: None },
            Err(e) => MonotonicityRow { r, omega: None, omega_over_r: None, slope: None, flagged: false, error: Some(e.to_string()) },
        })
        .collect();
    for j in 0..rows.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (rows[j].omega_over_r, rows[j + 1].omega_over_r) {
            let s = (b - a) / (rows[j + 1].r - rows[j].r);
            rows[j].slope = Some(s);
            rows[j].flagged = -s > cfg.slope_bound;
        }
    }
    Ok(rows)
}
