use std::collections::VecDeque;

use super::Csr;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee ordering of the sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &Csr) -> Vec<usize> {
    let n = a.n;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // (last node of deepest level with min degree, depth)
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut last = start;
        while let Some(v) = q.pop_front() {
            if dist[v] > dist[last] || (dist[v] == dist[last] && deg[v] < deg[last]) {
                last = v;
            }
            for &w in &adj[v] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (last, dist[last])
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (deg[i], i))
            .unwrap();
        // pseudo-peripheral start
        let mut start = seed;
        let (mut far, mut depth) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (f2, d2) = bfs_levels(far, &visited);
            if d2 <= depth {
                break;
            }
            start = far;
            far = f2;
            depth = d2;
        }
        let _ = far;
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

fn bandwidth(a: &Csr, inv: &[usize]) -> usize {
    let mut bw = 0;
    for i in 0..a.n {
        for (j, _) in a.row(i) {
            bw = bw.max(inv[i].abs_diff(inv[j]));
        }
    }
    bw
}

/// Banded LU with partial pivoting, for general (indefinite) systems.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    perm: Vec<usize>,
    /// Row `i` stores columns `i - kl ..= i + 2 kl` of U.
    u: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &Csr) -> Result<Self> {
        let perm = rcm_ordering(a);
        let inv = inverse(&perm);
        let n = a.n;
        let kl = bandwidth(a, &inv);
        let width = 3 * kl + 1;
        let mut u = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (ni, nj) = (inv[i], inv[j]);
                u[at(ni, nj)] += v;
            }
        }
        let scale = a.inf_norm().max(f64::MIN_POSITIVE);
        let mut mult = vec![0.0; n * kl.max(1)];
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = u[at(k, k)].abs();
            for i in k + 1..=last {
                let v = u[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 || best < scale * 1e-15 {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let jmax = (k + 2 * kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    u.swap(at(k, j), at(p, j));
                }
            }
            let d = u[at(k, k)];
            for i in k + 1..=last {
                let l = u[at(i, k)] / d;
                mult[k * kl + (i - k - 1)] = l;
                if l != 0.0 {
                    for j in k..=jmax {
                        let ukj = u[at(k, j)];
                        u[at(i, j)] -= l * ukj;
                    }
                }
            }
        }
        Ok(Self { n, kl, width, perm, u, mult, piv })
    }

    pub fn bandwidth(&self) -> usize {
        self.kl
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl) = (self.n, self.kl);
        let at = |i: usize, j: usize| i * self.width + (j + kl - i);
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.mult[k * kl + (i - k - 1)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + 2 * kl).min(n - 1) {
                s -= self.u[at(k, j)] * x[j];
            }
            x[k] = s / self.u[at(k, k)];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// Banded Cholesky `A = L Lᵀ`; fails on matrices that are not positive definite.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    perm: Vec<usize>,
    /// Row `i` stores columns `i - bw ..= i` of L.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &Csr) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &Csr, perm: Vec<usize>) -> Result<Self> {
        let inv = inverse(&perm);
        let n = a.n;
        let bw = bandwidth(a, &inv);
        let w = bw + 1;
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (ni, nj) = (inv[i], inv[j]);
                if nj <= ni {
                    l[at(ni, nj)] += v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[at(i, j)];
                for k in k0..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Singular(i));
                    }
                    l[at(i, i)] = s.sqrt();
                } else {
                    l[at(i, j)] = s / l[at(j, j)];
                }
            }
        }
        Ok(Self { n, bw, perm, l })
    }

    pub fn ordering(&self) -> &[usize] {
        &self.perm
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[at(i, k)] * x[k];
            }
            x[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..=(i + bw).min(n - 1) {
                s -= self.l[at(k, i)] * x[k];
            }
            x[i] = s / self.l[at(i, i)];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
