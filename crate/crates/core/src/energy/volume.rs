//! The enclosed-volume functional.
//!
//! `V(u) = C(u) + S(∂u)` where `C(u) = Σ_T ⟨X(ū_T), N_T⟩` is a sum over
//! triangles of the flux of `X(y) = (y - o) ∫₀¹ t² f(o + t(y - o)) dt`
//! (`div X = f`) through the triangle's area vector, and `S` closes the
//! surface with the region of `Σ` bounded by `∂u`, measured as a sum of
//! spherical-triangle solid angles in the affine chart `L⁻¹(· - o)`.
//! `S` is defined up to multiples of `∫_Ω f`; its differential is single
//! valued, so `dV` is an exact 1-form on the space of maps.

use super::jet::{cross, dot, Jet, J3};
use super::{EnergyParams, Forcing, SurfaceMap};
use crate::error::Result;
use crate::par;
use crate::{Mat3, Vec3};

/// `X`, its Jacobian and the Hessians of its components.
pub type XJet = (Vec3, Mat3, [Mat3; 3]);

/// Evaluator for the potential field `X` of `f`.
#[derive(Debug, Clone, Copy)]
pub struct VolumeField {
    params: EnergyParams,
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    // nodes and weights on [0, 1]
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

const GL_POINTS: usize = 12;

impl VolumeField {
    pub fn new(params: &EnergyParams) -> Self {
        Self { params: *params }
    }

    pub fn origin(&self) -> Vec3 {
        self.params.surface.center()
    }

    fn linear(&self, z: Vec3, k: f64) -> XJet {
        let c = k / 3.0;
        (z * c, Mat3::identity() * c, [Mat3::zeros(); 3])
    }

    pub fn eval(&self, y: &Vec3) -> Result<XJet> {
        let z = y - self.origin();
        let pc = match self.params.forcing {
            Forcing::Constant(h) => return Ok(self.linear(z, self.params.scale * h)),
            Forcing::Prescribed(pc) => pc,
        };
        let kappa = self.params.scale * pc.h;
        if pc.on_plateau(y) {
            return Ok(self.linear(z, kappa));
        }
        let bar = &pc.barrier.surface;
        let o = self.origin();
        let dist = |t: f64| -> Result<f64> { Ok(bar.outside_distance_jet(&(o + z * t))?.0) };
        // the distance along the ray is nondecreasing; bracket the transition
        let crossing = |level: f64| -> Result<f64> {
            if dist(1.0)? <= level {
                return Ok(1.0);
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if dist(mid)? <= level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        };
        let ta = crossing(pc.t0 / 4.0)?;
        let tb = crossing(3.0 * pc.t0 / 4.0)?.max(ta);
        let mut g = kappa * ta.powi(3) / 3.0;
        let mut dg = Vec3::zeros();
        let mut hg = Mat3::zeros();
        for (s, w) in gauss_legendre(GL_POINTS) {
            let t = ta + (tb - ta) * s;
            let w = w * (tb - ta);
            let (f, gf, hf) = self.params.f_jet(&(o + z * t))?;
            g += w * t * t * f;
            dg += gf * (w * t.powi(3));
            hg += hf * (w * t.powi(4));
        }
        let x = z * g;
        let j = Mat3::identity() * g + z * dg.transpose();
        let hx = [0, 1, 2].map(|m| {
            let mut h = hg * z[m];
            for k in 0..3 {
                h[(m, k)] += dg[k];
                h[(k, m)] += dg[k];
            }
            h
        });
        Ok((x, j, hx))
    }
}

/// `N_T = ½ (u_b - u_a) × (u_c - u_a)`.
fn area_vector(p: &[Vec3; 3]) -> Vec3 {
    0.5 * (p[1] - p[0]).cross(&(p[2] - p[0]))
}

fn corners(u: &SurfaceMap, t: usize) -> [Vec3; 3] {
    u.mesh().triangles[t].map(|i| u.positions[i])
}

/// `C(u)`.
pub fn cone_volume(u: &SurfaceMap, params: &EnergyParams) -> Result<f64> {
    let field = VolumeField::new(params);
    let parts = par::map_range(u.mesh().num_triangles(), |t| {
        let p = corners(u, t);
        let (x, _, _) = field.eval(&((p[0] + p[1] + p[2]) / 3.0))?;
        Ok(x.dot(&area_vector(&p)))
    });
    let vals: Vec<f64> = parts.into_iter().collect::<Result<_>>()?;
    Ok(par::tree_sum(&vals))
}

/// Gradient of one triangle's `⟨X(ū), N⟩` with respect to its corners.
pub(crate) fn triangle_volume_grad(field: &VolumeField, p: &[Vec3; 3]) -> Result<[Vec3; 3]> {
    let (x, j, _) = field.eval(&((p[0] + p[1] + p[2]) / 3.0))?;
    let nv = area_vector(p);
    let base = j.transpose() * nv / 3.0;
    Ok([0, 1, 2].map(|k| base + 0.5 * (p[(k + 1) % 3] - p[(k + 2) % 3]).cross(&x)))
}

/// Hessian blocks of one triangle's `⟨X(ū), N⟩`.
pub(crate) fn triangle_volume_hess(field: &VolumeField, p: &[Vec3; 3]) -> Result<[[Mat3; 3]; 3]> {
    let (x, j, hx) = field.eval(&((p[0] + p[1] + p[2]) / 3.0))?;
    let nv = area_vector(p);
    let common = (hx[0] * nv[0] + hx[1] * nv[1] + hx[2] * nv[2]) / 9.0;
    let e = [0, 1, 2].map(|k| (p[(k + 1) % 3] - p[(k + 2) % 3]).cross_matrix());
    let xc = x.cross_matrix() * 0.5;
    let mut out = [[Mat3::zeros(); 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            let mut b = common + (e[k] * j - j.transpose() * e[l]) / 6.0;
            if l == (k + 1) % 3 {
                b -= xc;
            } else if k == (l + 1) % 3 {
                b += xc;
            }
            out[k][l] = b;
        }
    }
    Ok(out)
}

/// Unit directions of boundary points in the affine chart of `Σ`.
pub(crate) fn chart_directions(params: &EnergyParams, pts: &[Vec3]) -> Vec<Vec3> {
    pts.iter().map(|y| params.surface.to_unit(y).normalize()).collect()
}

/// Pole for the solid-angle fan, kept away from the antipodes of every
/// direction in `sets`.
pub fn choose_pole(sets: &[&[Vec3]]) -> Vec3 {
    let mut cands: Vec<Vec3> = Vec::new();
    for s in sets {
        let n = s.len();
        let mean: Vec3 = s.iter().sum::<Vec3>() / n.max(1) as f64;
        let area: Vec3 = (0..n).map(|k| s[k].cross(&s[(k + 1) % n])).sum();
        for v in [mean, area, -area] {
            if v.norm() > 1e-12 {
                cands.push(v.normalize());
            }
        }
    }
    for e in [Vec3::x(), Vec3::y(), Vec3::z()] {
        cands.push(e);
        cands.push(-e);
    }
    let score = |p: &Vec3| {
        sets.iter()
            .flat_map(|s| s.iter())
            .map(|d| 1.0 + p.dot(d))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = cands[0];
    let mut best_score = score(&best);
    for c in &cands[1..] {
        let s = score(c);
        if s > best_score + 1e-12 {
            best = *c;
            best_score = s;
        }
    }
    best
}

/// Solid angle of the spherical triangle `(pole, s(a), s(b))` as a jet in
/// `(a, b) ∈ R⁶`, `s(y) = L⁻¹(y - o)/|L⁻¹(y - o)|`.
pub(crate) fn edge_solid_angle(params: &EnergyParams, a: &Vec3, b: &Vec3, pole: &Vec3) -> Jet<6> {
    let surf = &params.surface;
    let (o, l) = (surf.center(), surf.axes());
    let dir = |y: &Vec3, off: usize| -> J3<6> {
        let z: J3<6> =
            [0, 1, 2].map(|i| (Jet::var(y[i], off + i) - Jet::constant(o[i])).scale(1.0 / l[i]));
        let inv = dot(&z, &z).sqrt().recip();
        z.map(|c| c * inv)
    };
    let (sa, sb) = (dir(a, 0), dir(b, 3));
    let p: J3<6> = [0, 1, 2].map(|i| Jet::constant(pole[i]));
    let det = dot(&p, &cross(&sa, &sb));
    let den = Jet::constant(1.0) + dot(&p, &sa) + dot(&sa, &sb) + dot(&sb, &p);
    det.atan2(&den).scale(2.0)
}

/// Coefficient turning summed solid angles into the side term.
pub(crate) fn side_coefficient(params: &EnergyParams) -> f64 {
    -params.interior_value() * params.surface.det_l() / 3.0
}

/// `S(∂u)` for a given fan pole.
pub fn side_term(u: &SurfaceMap, params: &EnergyParams, pole: &Vec3) -> f64 {
    let lp = u.boundary_loop();
    let n = lp.len();
    let c = side_coefficient(params);
    let angles: Vec<f64> = (0..n)
        .map(|k| {
            let (sa, sb) = (
                params.surface.to_unit(&lp[k]).normalize(),
                params.surface.to_unit(&lp[(k + 1) % n]).normalize(),
            );
            2.0 * pole.dot(&sa.cross(&sb)).atan2(1.0 + pole.dot(&sa) + sa.dot(&sb) + sb.dot(pole))
        })
        .collect();
    c * par::tree_sum(&angles)
}

/// Pole suited to the boundary of `u`.
pub fn default_pole(u: &SurfaceMap, params: &EnergyParams) -> Vec3 {
    let d = chart_directions(params, &u.boundary_loop());
    choose_pole(&[&d])
}

/// `V(u) = C(u) + S(∂u)` on the branch fixed by `pole`.
pub fn volume_function(u: &SurfaceMap, params: &EnergyParams, pole: &Vec3) -> Result<f64> {
    Ok(cone_volume(u, params)? + side_term(u, params, pole))
}

/// Nodal gradient of `V`.
pub fn volume_gradient(u: &SurfaceMap, params: &EnergyParams) -> Result<Vec<Vec3>> {
    let field = VolumeField::new(params);
    let mesh = u.mesh();
    let per_tri = par::map_range(mesh.num_triangles(), |t| triangle_volume_grad(&field, &corners(u, t)));
    let mut g = vec![Vec3::zeros(); u.len()];
    for (t, gt) in per_tri.into_iter().enumerate() {
        let gt = gt?;
        for k in 0..3 {
            g[mesh.triangles[t][k]] += gt[k];
        }
    }
    add_side_gradient(u, params, &mut g);
    Ok(g)
}

pub(crate) fn add_side_gradient(u: &SurfaceMap, params: &EnergyParams, g: &mut [Vec3]) {
    let pole = default_pole(u, params);
    let c = side_coefficient(params);
    let bl = &u.mesh().boundary;
    let n = bl.len();
    for k in 0..n {
        let (a, b) = (bl[k], bl[(k + 1) % n]);
        let j = edge_solid_angle(params, &u.positions[a], &u.positions[b], &pole);
        for i in 0..3 {
            g[a][i] += c * j.g[i];
            g[b][i] += c * j.g[3 + i];
        }
    }
}

/// Per-edge Hessian blocks of `S`, as `(a, b, [[aa, ab], [ba, bb]])`.
pub fn volume_hessian_edges(u: &SurfaceMap, params: &EnergyParams) -> Vec<(usize, usize, [[Mat3; 2]; 2])> {
    let pole = default_pole(u, params);
    let c = side_coefficient(params);
    let bl = &u.mesh().boundary;
    let n = bl.len();
    (0..n)
        .map(|k| {
            let (a, b) = (bl[k], bl[(k + 1) % n]);
            let j = edge_solid_angle(params, &u.positions[a], &u.positions[b], &pole);
            let blk = |r: usize, s: usize| Mat3::from_fn(|i, l| c * j.h[3 * r + i][3 * s + l]);
            (a, b, [[blk(0, 0), blk(0, 1)], [blk(1, 0), blk(1, 1)]])
        })
        .collect()
}
