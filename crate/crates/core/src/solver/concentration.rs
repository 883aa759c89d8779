use serde::Serialize;

use super::SolveConfig;
use crate::energy::SurfaceMap;
use crate::error::{Error, Result};
use crate::mesh::DiskMesh;

/// Energy concentration along a sequence of maps.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConcentrationReport {
    pub detected: bool,
    pub eta: f64,
    /// Ball centres `x_k`, one per map that has a scale.
    pub points: Vec<[f64; 2]>,
    /// Scales `t_k` with `Q_k(t_k) = η/3`.
    pub scales: Vec<f64>,
    /// `∫_{B_{2t_k}(x_k) ∩ B} |∇u_k|²`.
    pub local_energies: Vec<f64>,
    pub eps_over_scale: Vec<f64>,
    pub boundary_distance: Vec<f64>,
    /// Scales at the bottom of the radius grid (below mesh resolution).
    pub unresolved: Vec<bool>,
}

/// Sub-triangle centroids per mesh triangle: `SUB²` points.
const SUB: usize = 3;

/// Weighted samples of `|∇u|²` bucketed on a uniform grid.
struct Samples {
    pts: Vec<[f64; 2]>,
    w: Vec<f64>,
}

impl Samples {
    fn new(u: &SurfaceMap) -> Self {
        let m = u.mesh();
        let mut local = Vec::with_capacity(SUB * SUB);
        for i in 0..SUB {
            for j in 0..SUB - i {
                local.push([(i as f64 + 1.0 / 3.0) / SUB as f64, (j as f64 + 1.0 / 3.0) / SUB as f64]);
                if i + j + 2 <= SUB {
                    local.push([(i as f64 + 2.0 / 3.0) / SUB as f64, (j as f64 + 2.0 / 3.0) / SUB as f64]);
                }
            }
        }
        let per = crate::par::map_range(m.num_triangles(), |t| {
            let (ux, uy) = u.partials(t);
            let w = m.area(t) * (ux.norm_squared() + uy.norm_squared()) / local.len() as f64;
            let [a, b, c] = m.triangles[t].map(|k| m.vertices[k]);
            local
                .iter()
                .map(|&[s, r]| {
                    let p = [
                        a[0] + s * (b[0] - a[0]) + r * (c[0] - a[0]),
                        a[1] + s * (b[1] - a[1]) + r * (c[1] - a[1]),
                    ];
                    (p, w)
                })
                .collect::<Vec<_>>()
        });
        let (pts, w) = per.into_iter().flatten().unzip();
        Self { pts, w }
    }
}

/// Samples sorted into square cells of side `t` over `[-1, 1]²`.
struct Grid<'a> {
    s: &'a Samples,
    cell: f64,
    n: usize,
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> Grid<'a> {
    fn new(s: &'a Samples, t: f64) -> Self {
        let n = ((2.0 / t).ceil() as usize).clamp(1, 4096);
        let cell = 2.0 / n as f64;
        let idx = |p: &[f64; 2]| {
            let i = (((p[0] + 1.0) / cell) as usize).min(n - 1);
            let j = (((p[1] + 1.0) / cell) as usize).min(n - 1);
            j * n + i
        };
        let mut start = vec![0usize; n * n + 1];
        for p in &s.pts {
            start[idx(p) + 1] += 1;
        }
        for k in 0..n * n {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut order = vec![0; s.pts.len()];
        for (k, p) in s.pts.iter().enumerate() {
            let c = idx(p);
            order[fill[c]] = k;
            fill[c] += 1;
        }
        Self { s, cell, n, start, order }
    }

    /// `∫_{B_t(x)} |∇u|²` (requires `t ≤ cell`).
    fn ball(&self, x: [f64; 2], t: f64) -> f64 {
        let r = (t / self.cell).ceil() as isize;
        let ci = ((x[0] + 1.0) / self.cell).floor() as isize;
        let cj = ((x[1] + 1.0) / self.cell).floor() as isize;
        let n = self.n as isize;
        let mut sum = 0.0;
        for j in (cj - r).max(0)..=(cj + r).min(n - 1) {
            for i in (ci - r).max(0)..=(ci + r).min(n - 1) {
                let c = (j * n + i) as usize;
                for &k in &self.order[self.start[c]..self.start[c + 1]] {
                    let p = self.s.pts[k];
                    let (dx, dy) = (p[0] - x[0], p[1] - x[1]);
                    if dx * dx + dy * dy <= t * t {
                        sum += self.s.w[k];
                    }
                }
            }
        }
        sum
    }
}

/// `max_x ∫_{B_t(x) ∩ B} |∇u|²` over mesh vertices, with the first maximizer.
fn q_max(mesh: &DiskMesh, s: &Samples, t: f64) -> (f64, usize) {
    let grid = Grid::new(s, t);
    let vals = crate::par::map_slice(&mesh.vertices, |&x| grid.ball(x, t));
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, v) in vals.into_iter().enumerate() {
        if v > best.0 {
            best = (v, k);
        }
    }
    best
}

/// Largest local energy at radius `t`, and where it is attained.
pub fn local_energy_max(u: &SurfaceMap, t: f64) -> ([f64; 2], f64) {
    let s = Samples::new(u);
    let (q, k) = q_max(u.mesh(), &s, t);
    (u.mesh().vertices[k], q)
}

/// Radii `2^{-j}/4` down to half the mesh size.
fn radius_grid(h: f64) -> Vec<f64> {
    let mut g = vec![0.25];
    while g[g.len() - 1] / 2.0 >= 0.5 * h {
        let t = g[g.len() - 1] / 2.0;
        g.push(t);
    }
    g
}

struct Scale {
    t: f64,
    centre: [f64; 2],
    energy: f64,
    unresolved: bool,
}

fn scale_of(u: &SurfaceMap, eta: f64) -> Option<Scale> {
    let m = u.mesh();
    let s = Samples::new(u);
    let target = eta / 3.0;
    let grid = radius_grid(m.h());
    if q_max(m, &s, grid[0]).0 < target {
        return None;
    }
    // last grid radius still reaching the target
    let mut j = 0;
    while j + 1 < grid.len() && q_max(m, &s, grid[j + 1]).0 >= target {
        j += 1;
    }
    let unresolved = j + 1 == grid.len();
    let (mut lo, mut hi) = (if unresolved { 0.0 } else { grid[j + 1] }, grid[j]);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if q_max(m, &s, mid).0 >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-4 * hi {
            break;
        }
    }
    let (_, k) = q_max(m, &s, hi);
    let centre = m.vertices[k];
    let big = Grid::new(&s, 2.0 * hi);
    let energy = big.ball(centre, 2.0 * hi);
    Some(Scale { t: hi, centre, energy, unresolved })
}

/// Scale selection `Q_k(t_k) = η/3` per map and a concentration verdict.
///
/// Detected when every map has a scale, the scales are non-increasing and at
/// least halve overall, and every reported ball `B_{2t_k}(x_k)` carries at
/// least `η/2`.
pub fn detect_concentration(seq: &[(f64, SurfaceMap)], cfg: &SolveConfig) -> Result<ConcentrationReport> {
    let eta = cfg.eta_num;
    let mut rep = ConcentrationReport { eta, ..Default::default() };
    if let Some((_, first)) = seq.first() {
        for (_, u) in seq {
            if u.len() != first.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), got: u.len() });
            }
        }
    }
    let scales: Vec<Option<Scale>> = seq.iter().map(|(_, u)| scale_of(u, eta)).collect();
    let mut complete = !seq.is_empty();
    for ((eps, _), sc) in seq.iter().zip(scales) {
        let Some(sc) = sc else {
            complete = false;
            continue;
        };
        rep.points.push(sc.centre);
        rep.scales.push(sc.t);
        rep.local_energies.push(sc.energy);
        rep.eps_over_scale.push(eps / sc.t);
        rep.boundary_distance.push(1.0 - sc.centre[0].hypot(sc.centre[1]));
        rep.unresolved.push(sc.unresolved);
    }
    let n = rep.scales.len();
    rep.detected = complete
        && n >= 2
        && rep.scales.windows(2).all(|w| w[1] <= w[0])
        && rep.scales[n - 1] <= 0.5 * rep.scales[0]
        && rep.local_energies.iter().all(|&e| e >= eta / 2.0);
    Ok(rep)
}
