use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{BandCholesky, Csr};
use crate::error::{Error, Result};

/// Eigenpairs of `A x = λ M x` with diagonal `M`, ascending, `M`-orthonormal.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖M^{-1/2}(A x - λ M x)‖₂` per pair.
    pub residuals: Vec<f64>,
}

fn scaled(a: &Csr, m: &[f64]) -> Result<(Csr, Vec<f64>)> {
    if m.len() != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: m.len() });
    }
    if m.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Eigen("mass must be positive".into()));
    }
    let d: Vec<f64> = m.iter().map(|x| 1.0 / x.sqrt()).collect();
    Ok((a.scale_sym(&d), d))
}

fn finish(b: &Csr, d: &[f64], values: Vec<f64>, zs: Vec<Vec<f64>>) -> EigenPairs {
    let residuals = values
        .iter()
        .zip(&zs)
        .map(|(&l, z)| {
            let bz = b.mul_vec(z);
            bz.iter().zip(z).map(|(p, q)| (p - l * q).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let vectors = zs
        .into_iter()
        .map(|z| z.iter().zip(d).map(|(zi, di)| zi * di).collect())
        .collect();
    EigenPairs { values, vectors, residuals }
}

/// Full dense solve through `M^{-1/2} A M^{-1/2}`.
pub fn dense_generalized(a: &Csr, m: &[f64]) -> Result<EigenPairs> {
    let (b, d) = scaled(a, m)?;
    let eig = SymmetricEigen::new(b.to_dense());
    let mut idx: Vec<usize> = (0..a.n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let zs = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok(finish(&b, &d, values, zs))
}

/// Lowest `k` eigenpairs by shift-invert Lanczos with full reorthogonalization.
///
/// The shift is pushed below the spectrum until `B - σI` admits a Cholesky
/// factorization, then raised by bisection so the wanted end is well separated.
pub fn lowest_generalized(a: &Csr, m: &[f64], k: usize, seed: u64) -> Result<EigenPairs> {
    let n = a.n;
    if k == 0 || k > n {
        return Err(Error::Eigen(format!("cannot compute {k} of {n} eigenpairs")));
    }
    let (b, d) = scaled(a, m)?;
    let ones = vec![1.0; n];
    let shifted = |s: f64| BandCholesky::factor(&b.add_diag(-s, &ones));

    let mut lo = -1.0;
    let mut hi = None;
    let mut fact = None;
    for _ in 0..80 {
        match shifted(lo) {
            Ok(f) => {
                fact = Some(f);
                break;
            }
            Err(_) => {
                hi = Some(lo);
                lo *= 4.0;
            }
        }
    }
    let mut fact = fact.ok_or_else(|| Error::Eigen("no shift below the spectrum".into()))?;
    let mut hi = hi.unwrap_or(0.0);
    if hi == 0.0 {
        // everything above -1: probe upward towards the bottom of the spectrum
        hi = b.inf_norm().max(1.0);
        if let Ok(f) = shifted(hi) {
            // whole spectrum above `hi` (degenerate case)
            lo = hi;
            fact = f;
            hi = 2.0 * hi + 1.0;
        }
    }
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        match shifted(mid) {
            Ok(f) => {
                lo = mid;
                fact = f;
            }
            Err(_) => hi = mid,
        }
    }
    let mut sigma = lo - 0.05 * (hi - lo).max(1e-3 * (1.0 + lo.abs()));
    match shifted(sigma) {
        Ok(f) => fact = f,
        Err(_) => sigma = lo,
    }

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut q0);

    let mut m_steps = (2 * k + 30).min(n);
    loop {
        let (values, zs, converged) = lanczos(&fact, &q0, m_steps, k, sigma);
        if converged || m_steps == n {
            let pairs = finish(&b, &d, values, zs);
            return Ok(pairs);
        }
        m_steps = (2 * m_steps).min(n);
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= s;
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lanczos(
    op: &BandCholesky,
    q0: &[f64],
    m: usize,
    k: usize,
    sigma: f64,
) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
    let n = q0.len();
    let mut qs: Vec<Vec<f64>> = vec![q0.to_vec()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let mut w = op.solve(&qs[j]);
        let a = dot(&w, &qs[j]);
        alpha.push(a);
        // two passes of full reorthogonalization
        for _ in 0..2 {
            for q in &qs {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let bnorm = dot(&w, &w).sqrt();
        if j + 1 == m || j + 1 == n {
            beta.push(bnorm);
            break;
        }
        if bnorm < 1e-14 * a.abs().max(1e-300) {
            // invariant subspace: restart with a vector orthogonal to the basis
            let mut r: Vec<f64> = (0..n).map(|i| ((i * 7919 + j * 104729) % 1000) as f64 - 500.0).collect();
            for q in &qs {
                let c = dot(&r, q);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
            normalize(&mut r);
            beta.push(0.0);
            qs.push(r);
            continue;
        }
        beta.push(bnorm);
        for x in w.iter_mut() {
            *x /= bnorm;
        }
        qs.push(w);
    }
    let mm = alpha.len();
    let mut t = DMatrix::zeros(mm, mm);
    for i in 0..mm {
        t[(i, i)] = alpha[i];
        if i + 1 < mm {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut idx: Vec<usize> = (0..mm).collect();
    // largest θ ↔ smallest λ
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let kk = k.min(mm);
    let last_beta = *beta.last().unwrap_or(&0.0);
    let mut converged = true;
    let mut values = Vec::with_capacity(kk);
    let mut zs = Vec::with_capacity(kk);
    for &i in idx.iter().take(kk) {
        let theta = eig.eigenvalues[i];
        let s: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let est = (last_beta * s[mm - 1]).abs();
        if !(theta > 0.0) || est > 1e-13 * theta {
            converged = false;
        }
        let mut z = vec![0.0; n];
        for (c, q) in s.iter().zip(&qs) {
            for (zi, qi) in z.iter_mut().zip(q) {
                *zi += c * qi;
            }
        }
        normalize(&mut z);
        values.push(sigma + 1.0 / theta);
        zs.push(z);
    }
    (values, zs, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn lanczos_matches_dense_with_negative_shift() {
        let n = 120;
        let a = laplacian_1d(n).add_diag(-0.05, &vec![1.0; n]);
        let m: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i as f64) * 0.1).sin()).collect();
        let dense = dense_generalized(&a, &m).unwrap();
        let sparse = lowest_generalized(&a, &m, 6, 7).unwrap();
        for i in 0..6 {
            assert!((dense.values[i] - sparse.values[i]).abs() < 1e-10);
            assert!(sparse.residuals[i] < 1e-8);
        }
        assert!(dense.values[0] < 0.0);
    }

    #[test]
    fn exact_eigenvalues_of_path_laplacian() {
        let n = 50;
        let a = laplacian_1d(n);
        let e = lowest_generalized(&a, &vec![1.0; n], 3, 1).unwrap();
        for (j, v) in e.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-11);
        }
    }
}
