//! Convex constraint surfaces given as level sets, barriers and the
//! prescribed-curvature field built from them.

use nalgebra::{Matrix2, Matrix3x2};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// `Σ = {φ = 0}` with `φ(y) = |L⁻¹(y - c)|² - 1`, `L = diag(axes)`.
///
/// Spheres and axis-aligned ellipsoids; `φ < 0` inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSurface {
    center: Vec3,
    axes: Vec3,
}

/// Tolerance on `|φ|` accepted after projection.
pub const PROJECTION_TOL: f64 = 1e-10;
const MAX_PROJECTION_ITERS: usize = 200;

impl ImplicitSurface {
    pub fn sphere(center: Vec3, radius: f64) -> Result<Self> {
        Self::ellipsoid(center, Vec3::new(radius, radius, radius))
    }

    pub fn unit_sphere() -> Self {
        Self { center: Vec3::zeros(), axes: Vec3::new(1.0, 1.0, 1.0) }
    }

    pub fn ellipsoid(center: Vec3, axes: Vec3) -> Result<Self> {
        if axes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(format!("ellipsoid axes must be positive: {axes:?}")));
        }
        Ok(Self { center, axes })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn axes(&self) -> Vec3 {
        self.axes
    }

    pub fn is_sphere(&self) -> bool {
        self.axes[0] == self.axes[1] && self.axes[1] == self.axes[2]
    }

    /// `det L`: enclosed volume is `4π/3 · det L`.
    pub fn det_l(&self) -> f64 {
        self.axes.iter().product()
    }

    pub fn volume(&self) -> f64 {
        4.0 * std::f64::consts::PI / 3.0 * self.det_l()
    }

    /// Diameter of the enclosed region.
    pub fn diameter(&self) -> f64 {
        2.0 * self.axes.max()
    }

    /// `L⁻¹ (y - c)`.
    pub fn to_unit(&self, y: &Vec3) -> Vec3 {
        (y - self.center).component_div(&self.axes)
    }

    /// `c + L s`.
    pub fn from_unit(&self, s: &Vec3) -> Vec3 {
        self.center + s.component_mul(&self.axes)
    }

    pub fn level(&self, y: &Vec3) -> f64 {
        self.to_unit(y).norm_squared() - 1.0
    }

    pub fn grad(&self, y: &Vec3) -> Vec3 {
        let z = y - self.center;
        Vec3::from_fn(|i, _| 2.0 * z[i] / (self.axes[i] * self.axes[i]))
    }

    pub fn hess(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from_fn(|i, _| 2.0 / (self.axes[i] * self.axes[i])))
    }

    /// Outward unit normal `∇φ/|∇φ|`.
    pub fn outward_normal(&self, y: &Vec3) -> Vec3 {
        self.grad(y).normalize()
    }

    /// Inward unit normal `η = -∇φ/|∇φ|`.
    pub fn inward_normal(&self, y: &Vec3) -> Vec3 {
        -self.outward_normal(y)
    }

    /// Nearest point of `Σ` to `y`.
    pub fn closest_point(&self, y: &Vec3) -> Result<Vec3> {
        let z = y - self.center;
        let fail = || Error::Projection { point: [y[0], y[1], y[2]] };
        if !z.iter().all(|v| v.is_finite()) || z.norm() < 1e-14 * self.axes.max() {
            return Err(fail());
        }
        let q = if self.is_sphere() {
            self.center + z * (self.axes[0] / z.norm())
        } else {
            // q_i = c_i + z_i a_i² / (a_i² + t),  Σ z_i² a_i² / (a_i² + t)² = 1
            let a2 = self.axes.component_mul(&self.axes);
            let g = |t: f64| -> (f64, f64) {
                let mut v = -1.0;
                let mut dv = 0.0;
                for i in 0..3 {
                    let s = a2[i] + t;
                    v += z[i] * z[i] * a2[i] / (s * s);
                    dv -= 2.0 * z[i] * z[i] * a2[i] / (s * s * s);
                }
                (v, dv)
            };
            let mut lo = -a2.min();
            let mut hi = self.axes.max() * z.norm();
            let mut t = (z.norm() - 1.0) * self.axes.min();
            t = t.clamp(0.5 * lo, hi);
            let mut done = false;
            for _ in 0..MAX_PROJECTION_ITERS {
                let (v, dv) = g(t);
                if v > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                if v.abs() < 1e-15 {
                    done = true;
                    break;
                }
                let mut tn = t - v / dv;
                if !(tn > lo && tn < hi) {
                    tn = 0.5 * (lo + hi);
                }
                if (tn - t).abs() <= 1e-16 * (1.0 + t.abs()) {
                    t = tn;
                    done = true;
                    break;
                }
                t = tn;
            }
            if !done {
                return Err(fail());
            }
            self.center + Vec3::from_fn(|i, _| z[i] * a2[i] / (a2[i] + t))
        };
        if self.level(&q).abs() > PROJECTION_TOL {
            return Err(fail());
        }
        Ok(q)
    }

    /// Orthonormal basis of `T_qΣ` (`q` on or near `Σ`).
    pub fn tangent_basis(&self, q: &Vec3) -> (Vec3, Vec3) {
        let n = self.outward_normal(q);
        tangent_frame(&n, None)
    }

    fn shape_2x2(&self, q: &Vec3) -> (Matrix3x2<f64>, Matrix2<f64>) {
        let (t1, t2) = self.tangent_basis(q);
        let tb = Matrix3x2::from_columns(&[t1, t2]);
        let s = tb.transpose() * self.hess() * tb / self.grad(q).norm();
        (tb, s)
    }

    /// Shape operator `P ∇²φ P / |∇φ|` at `q ∈ Σ` (positive for convex `Σ`).
    pub fn shape_operator(&self, q: &Vec3) -> Mat3 {
        let (tb, s) = self.shape_2x2(q);
        tb * s * tb.transpose()
    }

    /// Principal curvatures at `q ∈ Σ`, ascending.
    pub fn principal_curvatures(&self, q: &Vec3) -> [f64; 2] {
        let (_, s) = self.shape_2x2(q);
        let e = s.symmetric_eigenvalues();
        [e.min(), e.max()]
    }

    /// Mean curvature (sum of principal curvatures) at `q ∈ Σ`.
    pub fn mean_curvature(&self, q: &Vec3) -> f64 {
        let n = self.outward_normal(q);
        let h = self.hess();
        (h.trace() - (n.transpose() * h * n)[0]) / self.grad(q).norm()
    }

    /// `A^w(v, v) = ⟨w, η⟩ ∇²φ(v, v)/|∇φ|` for tangent `v` at `q ∈ Σ`.
    pub fn second_fundamental_form(&self, q: &Vec3, w: &Vec3, v: &Vec3) -> Result<f64> {
        let n = self.outward_normal(q);
        let nc = v.dot(&n);
        if nc.abs() > 1e-8 * v.norm().max(1.0) {
            return Err(Error::NotTangent { normal_component: nc });
        }
        Ok(-w.dot(&n) * (v.transpose() * self.hess() * v)[0] / self.grad(q).norm())
    }

    /// Signed distance along the outward normal from the projection.
    pub fn signed_distance(&self, y: &Vec3) -> Result<f64> {
        let q = self.closest_point(y)?;
        Ok((y - q).dot(&self.outward_normal(&q)))
    }

    /// Jacobian of the closest-point map, `(I + dS)⁻¹ P_T`.
    pub fn projection_jacobian(&self, y: &Vec3) -> Result<Mat3> {
        let q = self.closest_point(y)?;
        let d = (y - q).dot(&self.outward_normal(&q));
        let (tb, s) = self.shape_2x2(&q);
        let inv = (Matrix2::identity() + s * d)
            .try_inverse()
            .ok_or(Error::Projection { point: [y[0], y[1], y[2]] })?;
        Ok(tb * inv * tb.transpose())
    }

    /// Distance to the closed region `{φ ≤ 0}` with gradient and Hessian.
    pub fn outside_distance_jet(&self, y: &Vec3) -> Result<(f64, Vec3, Mat3)> {
        if self.level(y) <= 0.0 {
            return Ok((0.0, Vec3::zeros(), Mat3::zeros()));
        }
        let q = self.closest_point(y)?;
        let n = self.outward_normal(&q);
        let d = (y - q).dot(&n).max(0.0);
        let (tb, s) = self.shape_2x2(&q);
        let inv = (Matrix2::identity() + s * d)
            .try_inverse()
            .ok_or(Error::Projection { point: [y[0], y[1], y[2]] })?;
        Ok((d, n, tb * (s * inv) * tb.transpose()))
    }

    /// `n` quasi-uniform points on `Σ` (image of a Fibonacci lattice).
    pub fn sample_points(&self, n: usize) -> Vec<Vec3> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                self.from_unit(&Vec3::new(r * th.cos(), r * th.sin(), z))
            })
            .collect()
    }
}

/// Orthonormal pair spanning `n⊥`; the first vector follows `hint` if usable.
pub fn tangent_frame(n: &Vec3, hint: Option<&Vec3>) -> (Vec3, Vec3) {
    let mut t1 = hint
        .map(|h| h - n * n.dot(h))
        .filter(|t| t.norm() > 1e-8 * hint.map_or(1.0, |h| h.norm()))
        .unwrap_or_else(|| {
            let e = if n[0].abs() < 0.6 {
                Vec3::x()
            } else if n[1].abs() < 0.6 {
                Vec3::y()
            } else {
                Vec3::z()
            };
            e - n * n.dot(&e)
        });
    t1.normalize_mut();
    let t2 = n.cross(&t1).normalize();
    (t1, t2)
}

/// Convex barrier `Σ'` enclosing `Σ` with lower mean-curvature bound `H₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub surface: ImplicitSurface,
    pub h0: f64,
}

/// Sample count used when probing barrier curvature.
pub const BARRIER_SAMPLES: usize = 500;

impl BarrierSpec {
    /// Barrier with `H₀` taken as the sampled minimum mean curvature.
    pub fn new(surface: ImplicitSurface) -> Self {
        let h0 = surface
            .sample_points(BARRIER_SAMPLES)
            .iter()
            .map(|q| surface.mean_curvature(q))
            .fold(f64::INFINITY, f64::min);
        Self { surface, h0 }
    }

    /// Check that `Σ` lies in the closed region bounded by the barrier.
    pub fn check_encloses(&self, sigma: &ImplicitSurface) -> Result<()> {
        for q in sigma.sample_points(BARRIER_SAMPLES) {
            if self.surface.level(&q) > 1e-9 {
                return Err(Error::Barrier("constraint surface leaves the barrier region".into()));
            }
        }
        Ok(())
    }

    /// Minimum sampled mean curvature of the parallel surface at distance `t`.
    pub fn offset_mean_curvature(&self, t: f64) -> f64 {
        self.surface
            .sample_points(BARRIER_SAMPLES)
            .iter()
            .map(|q| {
                let [k1, k2] = self.surface.principal_curvatures(q);
                k1 / (1.0 + t * k1) + k2 / (1.0 + t * k2)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Grid resolution used by [`choose_t0`]: `t_j = j / (4·T0_GRID)`.
pub const T0_GRID: usize = 64;

/// Largest grid value `t₀ ∈ (0, 1/4]` such that every parallel surface at
/// distance `t ≤ t₀` keeps mean curvature above `(H₀ + H)/2`.
pub fn choose_t0(barrier: &BarrierSpec, h: f64) -> Result<f64> {
    if !(h >= 0.0) || h >= barrier.h0 {
        return Err(Error::Barrier(format!(
            "H = {h} must lie in [0, H0 = {})",
            barrier.h0
        )));
    }
    let sigma = &barrier.surface;
    for q in sigma.sample_points(BARRIER_SAMPLES) {
        if sigma.principal_curvatures(&q)[0] <= 0.0 {
            return Err(Error::Barrier("barrier is not strictly convex".into()));
        }
    }
    let target = 0.5 * (barrier.h0 + h);
    let mut best = None;
    for j in 1..=T0_GRID {
        let t = j as f64 / (4 * T0_GRID) as f64;
        if barrier.offset_mean_curvature(t) > target {
            best = Some(t);
        } else {
            break;
        }
    }
    best.ok_or_else(|| Error::Barrier("no admissible offset distance t0".into()))
}

/// `f = F(dist(·, Ω'))`: equal to `H` inside the `t₀/4`-neighbourhood of
/// `Ω'`, zero beyond `3t₀/4`, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribedCurvature {
    pub barrier: BarrierSpec,
    pub h: f64,
    pub t0: f64,
}

impl PrescribedCurvature {
    pub fn new(barrier: BarrierSpec, h: f64) -> Result<Self> {
        let t0 = choose_t0(&barrier, h)?;
        Ok(Self { barrier, h, t0 })
    }

    /// Profile `F(d)` and its first two derivatives.
    pub fn profile(&self, d: f64) -> (f64, f64, f64) {
        let (a, w) = (self.t0 / 4.0, self.t0 / 2.0);
        if d <= a {
            return (self.h, 0.0, 0.0);
        }
        if d >= a + w {
            return (0.0, 0.0, 0.0);
        }
        let s = (d - a) / w;
        let step = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let dstep = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        let ddstep = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (self.h * (1.0 - step), -self.h * dstep / w, -self.h * ddstep / (w * w))
    }

    /// Exact Lipschitz constant of the profile, `(15/8)·H/(t₀/2)`.
    pub fn lipschitz(&self) -> f64 {
        15.0 / 8.0 * self.h / (self.t0 / 2.0)
    }

    /// Whether `f` is exactly `H` at `y`.
    pub fn on_plateau(&self, y: &Vec3) -> bool {
        let s = &self.barrier.surface;
        if s.level(y) <= 0.0 {
            return true;
        }
        // cheap exclusion before projecting: |L⁻¹(y-c)| ≤ 1 + t/max_axis
        let r = s.to_unit(y).norm();
        r <= 1.0 + self.t0 / 4.0 / s.axes().max()
    }

    pub fn value(&self, y: &Vec3) -> Result<f64> {
        Ok(self.jet(y)?.0)
    }

    /// `(f, ∇f, ∇²f)` at `y`.
    pub fn jet(&self, y: &Vec3) -> Result<(f64, Vec3, Mat3)> {
        if self.on_plateau(y) {
            return Ok((self.h, Vec3::zeros(), Mat3::zeros()));
        }
        let (d, g, hd) = self.barrier.surface.outside_distance_jet(y)?;
        let (f, df, ddf) = self.profile(d);
        Ok((f, g * df, g * g.transpose() * ddf + hd * df))
    }
}
