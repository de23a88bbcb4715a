//! Small dense linear-algebra helpers shared across modules: Gram-based
//! orthonormalization with singular-value filtering, sorted symmetric /
//! Hermitian eigendecompositions, and power iteration for operator norms
//! available only as matvecs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::SingleParticleVector;

/// Eigenpairs of a real symmetric matrix, eigenvalues sorted descending.
pub fn sym_eigh_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenpairs of a complex Hermitian matrix, eigenvalues sorted descending.
pub fn herm_eigh_desc(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormalize the span of J-invariant vectors through the (real) Gram
/// matrix, keeping directions with singular value above `tol` relative to the
/// largest. Real combination coefficients preserve J-invariance exactly.
///
/// Returns the orthonormal basis and the singular values of the input family.
pub fn orthonormalize_real(
    vecs: &[SingleParticleVector],
    tol: f64,
) -> Result<(Vec<SingleParticleVector>, Vec<f64>)> {
    if vecs.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let m = vecs.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let g = vecs[i].inner(&vecs[j]).re;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let (vals, coef) = sym_eigh_desc(&gram);
    let lam_max = vals[0].max(0.0);
    if lam_max <= 0.0 {
        return Err(Error::RankDeficient("all singular values vanish".into()));
    }
    let cut = tol * tol * lam_max;
    let mut basis = Vec::new();
    let mut svals = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        svals.push(lam.max(0.0).sqrt());
        if lam > cut {
            let inv = lam.sqrt().recip();
            let mut b = vecs[0].scaled(Complex64::new(coef[(0, k)] * inv, 0.0));
            for j in 1..m {
                b = b.add_scaled(Complex64::new(coef[(j, k)] * inv, 0.0), &vecs[j]);
            }
            basis.push(b);
        }
    }
    if basis.is_empty() {
        return Err(Error::RankDeficient(format!(
            "no singular value above tolerance {tol:.1e}"
        )));
    }
    Ok((basis, svals))
}

/// Complex variant of [`orthonormalize_real`] through the Hermitian Gram matrix.
pub fn orthonormalize_complex(
    vecs: &[SingleParticleVector],
    tol: f64,
) -> Result<(Vec<SingleParticleVector>, Vec<f64>)> {
    if vecs.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let m = vecs.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = vecs[i].inner(&vecs[j]);
        }
    }
    let (vals, coef) = herm_eigh_desc(&gram);
    let lam_max = vals[0].max(0.0);
    if lam_max <= 0.0 {
        return Err(Error::RankDeficient("all singular values vanish".into()));
    }
    let cut = tol * tol * lam_max;
    let mut basis = Vec::new();
    let mut svals = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        svals.push(lam.max(0.0).sqrt());
        if lam > cut {
            let inv = Complex64::new(lam.sqrt().recip(), 0.0);
            let mut b = vecs[0].scaled(coef[(0, k)] * inv);
            for j in 1..m {
                b = b.add_scaled(coef[(j, k)] * inv, &vecs[j]);
            }
            basis.push(b);
        }
    }
    if basis.is_empty() {
        return Err(Error::RankDeficient(format!(
            "no singular value above tolerance {tol:.1e}"
        )));
    }
    Ok((basis, svals))
}

/// Settings for [`operator_norm`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIterOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        PowerIterOptions { max_iters: 300, tol: 1e-8, restarts: 3 }
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn vec_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value of a linear map given by `apply` and its adjoint,
/// via power iteration on A†A with random restarts. Weighted norms with a
/// uniform quadrature weight give the same operator norm as the Euclidean one,
/// so plain Euclidean inner products are used throughout.
pub fn operator_norm(
    dim: usize,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    mut apply_adjoint: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    rng: &mut impl Rng,
    opts: PowerIterOptions,
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for _ in 0..opts.restarts.max(1) {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n0 = vec_norm(&v);
        if n0 == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= n0;
        }
        let mut lam_prev = f64::NAN;
        let mut converged = false;
        let mut lam = 0.0;
        for it in 0..opts.max_iters {
            let w = apply_adjoint(&apply(&v));
            lam = vec_dot(&v, &w).re;
            let nw = vec_norm(&w);
            if nw == 0.0 {
                lam = 0.0;
                converged = true;
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            if it >= 20 && (lam - lam_prev).abs() <= opts.tol * lam.abs().max(1e-300) {
                converged = true;
                break;
            }
            lam_prev = lam;
        }
        if !converged {
            return Err(Error::PowerIteration { iters: opts.max_iters });
        }
        let sigma = lam.max(0.0).sqrt();
        best = Some(best.map_or(sigma, |b: f64| b.max(sigma)));
    }
    best.ok_or(Error::PowerIteration { iters: 0 })
}

/// Largest eigenvalue of a Hermitian positive-semidefinite map.
pub fn psd_top_eigenvalue(
    dim: usize,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    rng: &mut impl Rng,
    opts: PowerIterOptions,
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for _ in 0..opts.restarts.max(1) {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n0 = vec_norm(&v);
        for z in v.iter_mut() {
            *z /= n0;
        }
        let mut lam_prev = f64::NAN;
        let mut converged = false;
        let mut lam = 0.0;
        for it in 0..opts.max_iters {
            let w = apply(&v);
            lam = vec_dot(&v, &w).re;
            let nw = vec_norm(&w);
            if nw == 0.0 {
                lam = 0.0;
                converged = true;
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            if it >= 20 && (lam - lam_prev).abs() <= opts.tol * lam.abs().max(1e-300) {
                converged = true;
                break;
            }
            lam_prev = lam;
        }
        if !converged {
            return Err(Error::PowerIteration { iters: opts.max_iters });
        }
        best = Some(best.map_or(lam, |b: f64| b.max(lam)));
    }
    best.map(|b| b.max(0.0)).ok_or(Error::PowerIteration { iters: 0 })
}

/// ln(k!) accumulated incrementally up to `k_max` inclusive.
pub fn ln_factorial_table(k_max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(k_max + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=k_max {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// ln(k!) for arbitrary k: exact accumulation for small k, the Stirling series
/// with three correction terms beyond (absolute error below 1e-14 there).
pub fn ln_factorial(k: usize) -> f64 {
    if k < 256 {
        let mut acc = 0.0;
        for j in 2..=k {
            acc += (j as f64).ln();
        }
        return acc;
    }
    let x = k as f64;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
        + 1.0 / (1260.0 * x.powi(5))
}

/// Stable ln(Σ exp(x_i)) over a running accumulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
    any: bool,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0, any: false }
    }

    pub fn push(&mut self, x: f64) {
        if !self.any {
            self.max = x;
            self.sum = 1.0;
            self.any = true;
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if !self.any {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Gamma function at integer or half-integer arguments ≥ 1/2, by the exact
/// recursion from Γ(1/2) = √π and Γ(1) = 1.
pub fn gamma_half_integer(two_a: u32) -> f64 {
    assert!(two_a >= 1, "argument must be >= 1/2");
    if two_a % 2 == 0 {
        let n = two_a / 2; // Γ(n) = (n−1)!
        (1..n).map(|k| k as f64).product()
    } else {
        let mut v = std::f64::consts::PI.sqrt(); // Γ(1/2)
        let mut a = 0.5;
        while a + 1.0 <= two_a as f64 / 2.0 {
            v *= a;
            a += 1.0;
        }
        v
    }
}

/// Convenience wrapper for solving the principal eigenvector of a small
/// Hermitian PSD matrix given in place, returning (λ_max, vector).
pub fn top_eigpair_hermitian(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let (vals, vecs) = herm_eigh_desc(m);
    (vals[0], vecs.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec, SingleParticleVector};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn grid() -> Arc<crate::grid::MomentumGrid> {
        build_grid(GridSpec { s: 2, n: 6, pmax: 3.0, half_shift: true }).unwrap()
    }

    #[test]
    fn orthonormalize_filters_rank() {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a_vals: Vec<Complex64> =
            (0..g.len()).map(|_| Complex64::new(rng.random::<f64>(), 0.0)).collect();
        let b_vals: Vec<Complex64> =
            (0..g.len()).map(|_| Complex64::new(rng.random::<f64>(), 0.0)).collect();
        let a = SingleParticleVector::new(g.clone(), a_vals).unwrap();
        let b = SingleParticleVector::new(g.clone(), b_vals).unwrap();
        let aa = a.scaled(Complex64::new(2.0, 0.0)); // dependent copy
        let (basis, svals) = orthonormalize_real(&[a, aa, b], 1e-10).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(svals.len(), 3);
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(basis[i].inner(&basis[j]).re, want, epsilon = 1e-10);
                assert_relative_eq!(basis[i].inner(&basis[j]).im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn power_iteration_matches_dense_svd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let m = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mh = m.adjoint();
        let norm = operator_norm(
            n,
            |v| {
                let x = DVector::from_column_slice(v);
                (&m * x).as_slice().to_vec()
            },
            |v| {
                let x = DVector::from_column_slice(v);
                (&mh * x).as_slice().to_vec()
            },
            &mut rng,
            PowerIterOptions::default(),
        )
        .unwrap();
        let svd = m.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        assert_relative_eq!(norm, smax, max_relative = 1e-6);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-3.0, 0.5, 2.0, 1.0];
        let mut lse = LogSumExp::new();
        for &x in &xs {
            lse.push(x);
        }
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(lse.value(), direct, max_relative = 1e-14);
    }

    #[test]
    fn stirling_matches_accumulation() {
        // direct accumulation is the oracle across the switchover
        let mut acc = 0.0;
        for k in 2..=2000usize {
            acc += (k as f64).ln();
            let got = ln_factorial(k);
            assert!(
                (got - acc).abs() <= 1e-11 * acc.max(1.0),
                "ln {k}! = {got} vs {acc}"
            );
        }
    }

    #[test]
    fn gamma_half_integers() {
        assert_relative_eq!(gamma_half_integer(1), std::f64::consts::PI.sqrt()); // Γ(1/2)
        assert_relative_eq!(gamma_half_integer(2), 1.0); // Γ(1)
        assert_relative_eq!(
            gamma_half_integer(3),
            0.5 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-15
        ); // Γ(3/2)
        assert_relative_eq!(gamma_half_integer(8), 6.0); // Γ(4) = 3!
    }
}
