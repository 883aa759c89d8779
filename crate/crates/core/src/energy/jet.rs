//! Second-order forward-mode jets in `N` variables.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; N], h: [[0.0; N]; N] }
    }

    pub fn var(v: f64, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.g[i] = 1.0;
        j
    }

    /// `f(self)` given `f, f', f''` at `self.v`.
    pub fn chain(&self, f: f64, d1: f64, d2: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.g[i] = d1 * self.g[i];
            for k in 0..N {
                out.h[i][k] = d1 * self.h[i][k] + d2 * self.g[i] * self.g[k];
            }
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.v *= c;
        for i in 0..N {
            out.g[i] *= c;
            for k in 0..N {
                out.h[i][k] *= c;
            }
        }
        out
    }

    /// `atan2(self, x)`.
    pub fn atan2(&self, x: &Self) -> Self {
        let (y0, x0) = (self.v, x.v);
        let r2 = x0 * x0 + y0 * y0;
        let r4 = r2 * r2;
        let (fy, fx) = (x0 / r2, -y0 / r2);
        let (fyy, fxx, fxy) = (-2.0 * x0 * y0 / r4, 2.0 * x0 * y0 / r4, (y0 * y0 - x0 * x0) / r4);
        let mut out = Self::constant(y0.atan2(x0));
        for i in 0..N {
            out.g[i] = fy * self.g[i] + fx * x.g[i];
            for k in 0..N {
                out.h[i][k] = fy * self.h[i][k]
                    + fx * x.h[i][k]
                    + fyy * self.g[i] * self.g[k]
                    + fxx * x.g[i] * x.g[k]
                    + fxy * (self.g[i] * x.g[k] + x.g[i] * self.g[k]);
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for k in 0..N {
                self.h[i][k] += o.h[i][k];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..N {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for k in 0..N {
                out.h[i][k] = self.v * o.h[i][k]
                    + o.v * self.h[i][k]
                    + self.g[i] * o.g[k]
                    + o.g[i] * self.g[k];
            }
        }
        out
    }
}

pub type J3<const N: usize> = [Jet<N>; 3];

pub fn dot<const N: usize>(a: &J3<N>, b: &J3<N>) -> Jet<N> {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<const N: usize>(a: &J3<N>, b: &J3<N>) -> J3<N> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_form_derivatives() {
        // f(x, y) = atan2(x y, 1 + x²) / sqrt(y)
        let (x0, y0) = (0.7, 1.3);
        let x = Jet::<2>::var(x0, 0);
        let y = Jet::<2>::var(y0, 1);
        let f = (x * y).atan2(&(Jet::constant(1.0) + x * x)) * y.sqrt().recip();
        let g = |x: f64, y: f64| (x * y).atan2(1.0 + x * x) / y.sqrt();
        let h = 1e-5;
        assert!((f.v - g(x0, y0)).abs() < 1e-15);
        assert!((f.g[0] - (g(x0 + h, y0) - g(x0 - h, y0)) / (2.0 * h)).abs() < 1e-9);
        let fxy = (g(x0 + h, y0 + h) - g(x0 + h, y0 - h) - g(x0 - h, y0 + h) + g(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!((f.h[0][1] - fxy).abs() < 1e-5);
        assert!((f.h[0][1] - f.h[1][0]).abs() < 1e-14);
    }
}
