//! Single-particle correlation functions x ↦ ⟨g|U(x)g⟩ for g = h̃ ω^{-1/2} L± e
//! and the checks built on them: exact support vanishing of the (−) case
//! beyond 4r, power-law spatial decay fits, the uniform bound through
//! ‖ω^{2γ-1} h̃‖_∞, the kernel operator-norm bound for χ(O_ρ) ω^{-2} χ_x(O_ρ),
//! and spacelike decay with an empirically calibrated constant.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    omega_power, to_config, to_momentum, MomentumGrid, SingleParticleVector, SpacetimePoint,
};
use crate::linalg::{gamma_half_integer, operator_norm, PowerIterOptions};
use crate::localization::{HFunction, SmoothCutoff, Subspace};

/// Precomputed |g̃(p⃗)|² weights of a correlation function ⟨g|U(·)g⟩.
pub struct Correlator {
    grid: Arc<MomentumGrid>,
    /// Δˢ |g̃(p)|² per grid point.
    weights: Vec<f64>,
    /// corr(0) = ‖g‖².
    pub norm_sq: f64,
}

/// Correlator for g = h̃ ω^{-1/2} (L± e).
pub fn correlator(h: &HFunction, sub: &Subspace, e: &SingleParticleVector) -> Result<Correlator> {
    let grid = e.grid().clone();
    let pe = sub.project(e);
    let g = h.as_diagonal().apply(&omega_power(&grid, -0.5)?.apply(&pe)?)?;
    Ok(correlator_from_vector(&g))
}

/// Correlator for an arbitrary single-particle vector g.
pub fn correlator_from_vector(g: &SingleParticleVector) -> Correlator {
    let grid = g.grid().clone();
    let w = grid.weight();
    let weights: Vec<f64> = g.values().iter().map(|z| z.norm_sqr() * w).collect();
    let norm_sq = weights.iter().sum();
    Correlator { grid, weights, norm_sq }
}

impl Correlator {
    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    /// ⟨g|U(x)g⟩ by phase-weighted quadrature.
    pub fn eval(&self, x: &SpacetimePoint) -> Complex64 {
        let s = self.grid.s();
        let omega = self.grid.omega();
        let mut acc = Complex64::ZERO;
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let p = self.grid.momentum_point(i);
            let mut phase = omega[i] * x.t;
            for a in 0..s {
                phase -= p[a] * x.x[a];
            }
            acc += Complex64::from_polar(w, phase);
        }
        acc
    }

    /// Moduli at many points, evaluated in parallel, merged in input order.
    pub fn moduli(&self, points: &[SpacetimePoint]) -> Vec<f64> {
        points.par_iter().map(|x| self.eval(x).norm()).collect()
    }
}

/// Deterministic direction set used by radial scans: axes, a few face and body
/// diagonals, and two mixed directions.
pub fn standard_directions(s: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for a in 0..s {
        let mut d = vec![0.0; s];
        d[a] = 1.0;
        dirs.push(d);
    }
    for a in 0..s.min(3) {
        for b in (a + 1)..s.min(3) {
            let mut d = vec![0.0; s];
            d[a] = 1.0;
            d[b] = 1.0;
            dirs.push(d);
        }
    }
    dirs.push(vec![1.0; s]);
    if s >= 3 {
        let mut d1 = vec![0.0; s];
        d1[0] = 2.0;
        d1[1] = 1.0;
        dirs.push(d1);
        let mut d2 = vec![1.0; s];
        d2[1] = 2.0;
        d2[2] = 2.0;
        dirs.push(d2);
    }
    for d in dirs.iter_mut() {
        let n = d.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in d.iter_mut() {
            *c /= n;
        }
    }
    dirs
}

/// Result of scanning the (−) correlation over the region where it must vanish.
#[derive(Debug, Clone)]
pub struct SupportScan {
    /// max |corr| / corr(0) over configuration grid points in the shell.
    pub max_rel_on_grid: f64,
    /// max |corr| / corr(0) over off-grid sample points (trigonometric
    /// interpolation leakage; diagnostic only).
    pub max_rel_off_grid: f64,
    pub grid_samples: usize,
    pub shell: (f64, f64),
}

/// Scans |corr| over 4r < |x⃗| < wrap limit at x⁰ = 0. On configuration grid
/// points the discrete autocorrelation vanishes identically, so values are
/// pure roundoff; off-grid values measure interpolation leakage.
pub fn support_vanishing_check(
    corr: &Correlator,
    r: f64,
    max_samples: usize,
    rng: &mut impl Rng,
) -> Result<SupportScan> {
    let grid = &corr.grid;
    let lo = 4.0 * r;
    let hi = grid.wrap_limit();
    if lo >= hi {
        return Err(Error::Param(format!(
            "support shell empty: 4r = {lo} >= wrap limit {hi}; grid too small for r = {r}"
        )));
    }
    let candidates: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let rad = grid.config_radius(i);
            rad > lo && rad < hi
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::Param("no grid point in the support shell".into()));
    }
    let stride = (candidates.len() / max_samples.max(1)).max(1);
    let points: Vec<SpacetimePoint> = candidates
        .iter()
        .step_by(stride)
        .map(|&i| SpacetimePoint::spatial(grid.config_point(i).to_vec()))
        .collect();
    let mods = corr.moduli(&points);
    let max_on_grid = mods.iter().cloned().fold(0.0f64, f64::max);

    let s = grid.s();
    let off_points: Vec<SpacetimePoint> = (0..48)
        .map(|_| {
            let mut d: Vec<f64> = (0..s).map(|_| rng.random::<f64>() - 0.5).collect();
            let n = d.iter().map(|c| c * c).sum::<f64>().sqrt();
            let rad = lo + (hi - lo) * rng.random::<f64>();
            for c in d.iter_mut() {
                *c *= rad / n;
            }
            SpacetimePoint::spatial(d)
        })
        .collect();
    let off_mods = corr.moduli(&off_points);
    let max_off_grid = off_mods.iter().cloned().fold(0.0f64, f64::max);

    Ok(SupportScan {
        max_rel_on_grid: max_on_grid / corr.norm_sq,
        max_rel_off_grid: max_off_grid / corr.norm_sq,
        grid_samples: points.len(),
        shell: (lo, hi),
    })
}

/// Least-squares fit of ln(modulus) against ln(radius); returns
/// (slope, intercept, rms residual).
pub fn fit_log_log(radii: &[f64], moduli: &[f64]) -> Result<(f64, f64, f64)> {
    if radii.len() != moduli.len() || radii.len() < 4 {
        return Err(Error::Param(format!(
            "decay fit needs at least 4 usable radii, got {}",
            radii.len()
        )));
    }
    let n = radii.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = moduli.iter().map(|m| m.max(1e-300).ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::Param("degenerate radii for decay fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let d = y - slope * x - intercept;
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, residual))
}

/// Power-law decay fit of a correlation scan.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub exponent: f64,
    pub ln_amplitude: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub radii: Vec<f64>,
    pub moduli: Vec<f64>,
}

/// Radial decay fit: per radius the maximum of |corr| over the direction set,
/// with x⁰ = time_fraction·|x⃗| (0 for purely spatial scans). The window must
/// stay inside the periodic wrap limit.
pub fn spatial_decay_fit(
    corr: &Correlator,
    window: (f64, f64),
    n_radii: usize,
    time_fraction: f64,
    dirs: &[Vec<f64>],
) -> Result<DecayFit> {
    let (lo, hi) = window;
    let wrap = corr.grid.wrap_limit();
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Param(format!("bad fit window [{lo}, {hi}]")));
    }
    if hi > wrap {
        return Err(Error::Param(format!(
            "fit window reaches {hi} beyond the wrap limit {wrap}"
        )));
    }
    if n_radii < 4 {
        return Err(Error::Param("decay fit needs at least 4 radii".into()));
    }
    let ratio = (hi / lo).powf(1.0 / (n_radii as f64 - 1.0));
    let radii: Vec<f64> = (0..n_radii).map(|k| lo * ratio.powi(k as i32)).collect();
    let moduli: Vec<f64> = radii
        .par_iter()
        .map(|&rad| {
            dirs.iter()
                .map(|d| {
                    let x = SpacetimePoint::new(
                        time_fraction * rad,
                        d.iter().map(|c| c * rad).collect(),
                    );
                    corr.eval(&x).norm()
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    let (exponent, ln_amplitude, residual) = fit_log_log(&radii, &moduli)?;
    Ok(DecayFit { exponent, ln_amplitude, residual, window, radii, moduli })
}

/// ‖ω^{2γ-1} h̃‖_∞ over the grid: the constant of the uniform correlation bound
/// |corr(x)| ≤ ‖ω^{2γ-1} h̃‖_∞ t².
pub fn uniform_bound_constant(grid: &MomentumGrid, h: &HFunction, gamma: f64) -> f64 {
    grid.omega()
        .iter()
        .zip(h.htilde())
        .map(|(&w, &hh)| w.powf(2.0 * gamma - 1.0) * hh)
        .fold(0.0f64, f64::max)
}

/// One row of a kernel-bound sweep.
#[derive(Debug, Clone)]
pub struct KernelBound {
    pub x_radius: f64,
    pub computed: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Diagnostics of the L² + L^∞ split of ω^{-1}: the inside-ball part has
/// finite L² norm, the remainder is bounded by 1.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub l2_part: f64,
    pub sup_part: f64,
}

pub fn kernel_split(grid: &MomentumGrid) -> KernelSplit {
    let w = grid.weight();
    let mut l2 = 0.0;
    let mut sup: f64 = 0.0;
    for &om in grid.omega() {
        if om <= 1.0 {
            l2 += w / (om * om);
        } else {
            sup = sup.max(om.recip());
        }
    }
    KernelSplit { l2_part: l2.sqrt(), sup_part: sup }
}

/// ‖χ(O_ρ) ω^{-2} χ_x(O_ρ)‖ by power iteration on the composed
/// multiply–transform map, compared against the bound
/// c_{s,ρ,ε̃} · c_s (|x⃗| − 2ρ − 3ε̃)^{-(s-2)} with c_s = 2^{s/2-2} Γ(s/2 − 1)
/// and c_{s,ρ,ε̃} the quadrature of |χ(O_{2(ρ+ε̃)})|. Requires
/// |x⃗| ≥ 3(ρ + ε̃) and s ≥ 3.
pub fn kernel_norm_bound(
    grid: &Arc<MomentumGrid>,
    cutoff: &SmoothCutoff,
    x: &[f64],
    rng: &mut impl Rng,
) -> Result<KernelBound> {
    let s = grid.s();
    if s < 3 {
        return Err(Error::Param(format!(
            "kernel decay bound needs s >= 3 (s = 2 is infrared-singular), got s = {s}"
        )));
    }
    let rho = cutoff.rho;
    let pad = cutoff.pad;
    let x_radius = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if x_radius < 3.0 * (rho + pad) {
        return Err(Error::Param(format!(
            "|x| = {x_radius} inside the excluded near zone < {}",
            3.0 * (rho + pad)
        )));
    }

    let ftilde: Vec<f64> = grid.omega().iter().map(|&w| w.powi(-2)).collect();
    let chi = cutoff.values().to_vec();
    let chix = cutoff.shifted_values(x);
    let dim = grid.len();

    let forward = |mask_in: &[f64], mask_out: &[f64], v: &[Complex64]| -> Vec<Complex64> {
        let mut cfg: Vec<Complex64> = v.iter().zip(mask_in).map(|(z, &m)| z * m).collect();
        let mom = to_momentum(grid, &cfg).expect("grid sizes match");
        let vals: Vec<Complex64> = mom
            .values()
            .iter()
            .zip(&ftilde)
            .map(|(z, &f)| z * f)
            .collect();
        let sp = SingleParticleVector::new(grid.clone(), vals).expect("finite");
        cfg = to_config(&sp);
        for (c, &m) in cfg.iter_mut().zip(mask_out) {
            *c *= m;
        }
        cfg
    };

    let computed = operator_norm(
        dim,
        |v| forward(&chix, &chi, v),
        |v| forward(&chi, &chix, v),
        rng,
        PowerIterOptions { max_iters: 400, tol: 1e-6, restarts: 3 },
    )?;

    let c_s = (2.0f64).powf(s as f64 / 2.0 - 2.0) * gamma_half_integer(s as u32 - 2);
    let outer = SmoothCutoff::new(grid, 2.0 * (rho + pad), pad)?;
    let c_srho = (2.0 * std::f64::consts::PI).powf(-(s as f64) / 2.0) * outer.integral_abs();
    let dist = x_radius - (2.0 * rho + 3.0 * pad);
    if dist <= 0.0 {
        return Err(Error::Param("x inside the sup region of the bound".into()));
    }
    let bound = c_srho * c_s * dist.powi(-(s as i32 - 2));
    Ok(KernelBound { x_radius, computed, bound, margin: bound - computed })
}

/// Calibration of the spacelike decay constant: the largest observed ratio
/// |corr(x)| (|x⃗| − |x⁰| + 1)^{s-2-ε} / t² over a training sweep; the x = 0
/// ratio corr(0)/t² is always included.
pub fn calibrate_decay_ratio(
    corr: &Correlator,
    t: f64,
    eps: f64,
    points: &[SpacetimePoint],
) -> Result<f64> {
    let s = corr.grid.s() as f64;
    validate_spacelike(points)?;
    let mods = corr.moduli(points);
    let mut best: f64 = corr.norm_sq / (t * t);
    for (x, m) in points.iter().zip(&mods) {
        let lag = x.spatial_norm() - x.t.abs() + 1.0;
        best = best.max(m * lag.powf(s - 2.0 - eps) / (t * t));
    }
    Ok(best)
}

/// Margins of |corr(x)| ≤ Ĉ t² / (|x⃗| − |x⁰| + 1)^{s-2-ε} on a test sweep;
/// returns (point, modulus, margin) triples.
pub fn spacelike_margins(
    corr: &Correlator,
    chat: f64,
    t: f64,
    eps: f64,
    points: &[SpacetimePoint],
) -> Result<Vec<(SpacetimePoint, f64, f64)>> {
    let s = corr.grid.s() as f64;
    validate_spacelike(points)?;
    let mods = corr.moduli(points);
    Ok(points
        .iter()
        .zip(mods)
        .map(|(x, m)| {
            let lag = x.spatial_norm() - x.t.abs() + 1.0;
            let bound = chat * t * t * lag.powf(-(s - 2.0 - eps));
            (x.clone(), m, bound - m)
        })
        .collect())
}

fn validate_spacelike(points: &[SpacetimePoint]) -> Result<()> {
    for x in points {
        if x.spatial_norm() < x.t.abs() {
            return Err(Error::Param(format!(
                "timelike point supplied: |x⃗| = {} < |x⁰| = {}",
                x.spatial_norm(),
                x.t.abs()
            )));
        }
    }
    Ok(())
}

/// Minimum eigenvalue of the Gram matrix [corr(x_i − x_j)]; positive
/// definiteness of the correlation function keeps it ≥ 0 up to roundoff.
pub fn positivity_gram_min_eigenvalue(corr: &Correlator, points: &[SpacetimePoint]) -> f64 {
    let n = points.len();
    let mut gram = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = corr.eval(&points[i].sub(&points[j]));
        }
    }
    let (vals, _) = crate::linalg::herm_eigh_desc(&gram);
    vals.last().cloned().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::localization::{build_l_pm, choose_h, LocalizationSign, TestFunctionFamily};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn setup(n: usize, pmax: f64, r: f64) -> (Arc<MomentumGrid>, Subspace, Subspace, HFunction) {
        let g = build_grid(GridSpec { s: 3, n, pmax, half_shift: true }).unwrap();
        let fam = TestFunctionFamily::standard(&g, r, 6).unwrap();
        let lp = build_l_pm(&g, &fam, LocalizationSign::Plus, 1e-8).unwrap();
        let lm = build_l_pm(&g, &fam, LocalizationSign::Minus, 1e-8).unwrap();
        let h = choose_h(&g, r, 4.0).unwrap();
        (g, lp, lm, h)
    }

    #[test]
    fn corr_at_origin_is_norm_squared() {
        let (g, lp, _, h) = setup(12, 6.0, 1.0);
        let e = &lp.basis[0];
        let c = correlator(&h, &lp, e).unwrap();
        let v0 = c.eval(&SpacetimePoint::zero(g.s()));
        assert!(v0.im.abs() < 1e-12 * v0.re);
        assert!(v0.re >= 0.0);
        assert_relative_eq!(v0.re, c.norm_sq, max_relative = 1e-12);
    }

    #[test]
    fn corr_is_bounded_and_hermitian() {
        let (_, lp, _, h) = setup(12, 6.0, 1.0);
        let c = correlator(&h, &lp, &lp.basis[1]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..12 {
            let x = SpacetimePoint::new(
                2.0 * (rng.random::<f64>() - 0.5),
                (0..3).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect(),
            );
            let v = c.eval(&x);
            assert!(v.norm() <= c.norm_sq * (1.0 + 1e-12));
            let w = c.eval(&x.neg());
            assert!((w - v.conj()).norm() < 1e-12 * c.norm_sq);
        }
    }

    #[test]
    fn minus_correlation_vanishes_beyond_4r_on_grid() {
        // r = 0.5 so that the shell 4r < |x| < wrap is wide; 8r = 4 < wrap = 2π
        let (g, _, lm, _) = setup(16, 4.0, 0.5);
        let h = choose_h(&g, 0.5, 4.0).unwrap();
        let c = correlator(&h, &lm, &lm.basis[0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let scan = support_vanishing_check(&c, 0.5, 400, &mut rng).unwrap();
        assert!(scan.max_rel_on_grid < 1e-12, "grid leakage {}", scan.max_rel_on_grid);
        // full modulus at the origin (inside the support, no vanishing)
        let v0 = c.eval(&SpacetimePoint::zero(3));
        assert_relative_eq!(v0.re, c.norm_sq, max_relative = 1e-12);
        // interpolated off-grid values are nonzero but bounded; on this coarse
        // grid the trigonometric interpolation leaks at the percent scale
        assert!(scan.max_rel_off_grid < 0.2, "off-grid leakage {}", scan.max_rel_off_grid);
        assert!(scan.max_rel_off_grid > scan.max_rel_on_grid);
    }

    #[test]
    fn support_shell_can_be_empty() {
        let (g, _, lm, h) = setup(12, 6.0, 1.0);
        let c = correlator(&h, &lm, &lm.basis[0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        // 4r = 4 exceeds wrap = π at pmax = 6, n = 12
        assert!(g.wrap_limit() < 4.0);
        assert!(support_vanishing_check(&c, 1.0, 100, &mut rng).is_err());
    }

    #[test]
    fn log_log_fitter_recovers_exact_power_laws() {
        let radii: Vec<f64> = (0..8).map(|k| 1.5f64 * 1.3f64.powi(k)).collect();
        let moduli: Vec<f64> = radii.iter().map(|r| 2.7 * r.powf(-1.35)).collect();
        let (slope, intercept, residual) = fit_log_log(&radii, &moduli).unwrap();
        assert_relative_eq!(slope, -1.35, max_relative = 1e-12);
        assert_relative_eq!(intercept.exp(), 2.7, max_relative = 1e-12);
        assert!(residual < 1e-12);
        assert!(fit_log_log(&radii[..3], &moduli[..3]).is_err());
    }

    #[test]
    fn decay_fit_rejects_windows_beyond_wrap() {
        let (g, lp, _, h) = setup(12, 6.0, 1.0);
        let c = correlator(&h, &lp, &lp.basis[0]).unwrap();
        let dirs = standard_directions(3);
        let err = spatial_decay_fit(&c, (0.5, 1.2 * g.wrap_limit()), 6, 0.0, &dirs);
        assert!(err.is_err());
    }

    #[test]
    fn uniform_bound_holds_pointwise() {
        let (g, lp, _, h) = setup(16, 8.0, 1.0);
        let gamma = 0.95;
        let e = &lp.basis[0];
        let c = correlator(&h, &lp, e).unwrap();
        let ub = uniform_bound_constant(&g, &h, gamma);
        // ⟨e| L± ω^{-2γ} h̃ L± e⟩ plays the role of t² for a raw basis vector
        let th = omega_power(&g, -gamma).unwrap().compose(&h.sqrt_diagonal());
        let tsq = th.apply(&lp.project(e)).unwrap().norm_sq();
        let dirs = standard_directions(3);
        for rad in [0.5, 1.0, 2.0, 3.0] {
            for d in &dirs {
                let x = SpacetimePoint::spatial(d.iter().map(|c| c * rad).collect());
                let m = c.eval(&x).norm();
                assert!(m <= ub * tsq + 1e-10, "uniform bound violated: {m} > {}", ub * tsq);
            }
        }
    }

    #[test]
    fn kernel_power_iteration_matches_dense_oracle() {
        // small s=2 grid: assemble the composed operator densely and compare
        // largest singular values (the bound formula itself needs s >= 3)
        let g = build_grid(GridSpec { s: 2, n: 8, pmax: 4.0, half_shift: true }).unwrap();
        let cutoff = SmoothCutoff::new(&g, 0.8, 0.3).unwrap();
        let x = vec![2.0, 1.0];
        let chix = cutoff.shifted_values(&x);
        let ftilde: Vec<f64> = g.omega().iter().map(|&w| w.powi(-2)).collect();
        let dim = g.len();
        let apply = |mask_in: &[f64], mask_out: &[f64], v: &[Complex64]| -> Vec<Complex64> {
            let cfg: Vec<Complex64> = v.iter().zip(mask_in).map(|(z, &m)| z * m).collect();
            let mom = to_momentum(&g, &cfg).unwrap();
            let vals: Vec<Complex64> =
                mom.values().iter().zip(&ftilde).map(|(z, &f)| z * f).collect();
            let sp = SingleParticleVector::new(g.clone(), vals).unwrap();
            let mut out = to_config(&sp);
            for (c, &m) in out.iter_mut().zip(mask_out) {
                *c *= m;
            }
            out
        };
        let mut dense = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for j in 0..dim {
            let mut e = vec![Complex64::ZERO; dim];
            e[j] = Complex64::ONE;
            let col = apply(&chix, cutoff.values(), &e);
            for i in 0..dim {
                dense[(i, j)] = col[i];
            }
        }
        let svd = dense.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let norm = operator_norm(
            dim,
            |v| apply(&chix, cutoff.values(), v),
            |v| apply(cutoff.values(), &chix, v),
            &mut rng,
            PowerIterOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(norm, smax, max_relative = 1e-5);
    }

    #[test]
    fn kernel_bound_rejects_near_zone() {
        let g = build_grid(GridSpec { s: 3, n: 12, pmax: 6.0, half_shift: true }).unwrap();
        let cutoff = SmoothCutoff::new(&g, 0.5, 0.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let err = kernel_norm_bound(&g, &cutoff, &[1.0, 0.0, 0.0], &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn correlation_gram_is_positive() {
        let (_, lp, _, h) = setup(12, 6.0, 1.0);
        let c = correlator(&h, &lp, &lp.basis[0]).unwrap();
        let points: Vec<SpacetimePoint> = vec![
            SpacetimePoint::zero(3),
            SpacetimePoint::spatial(vec![0.7, 0.0, 0.0]),
            SpacetimePoint::new(0.4, vec![0.0, 1.1, 0.0]),
            SpacetimePoint::new(-0.3, vec![0.5, 0.5, 0.5]),
            SpacetimePoint::spatial(vec![0.0, 0.0, 2.0]),
        ];
        let min_eig = positivity_gram_min_eigenvalue(&c, &points);
        assert!(min_eig >= -1e-8 * c.norm_sq, "min eigenvalue {min_eig}");
    }

    #[test]
    fn spacelike_calibration_and_margins() {
        let (_, lp, _, h) = setup(16, 8.0, 1.0);
        let c = correlator(&h, &lp, &lp.basis[0]).unwrap();
        let eps = 0.1;
        let t = 1.0;
        let train: Vec<SpacetimePoint> = (0..10)
            .map(|k| {
                let rad = 0.4 + 0.25 * k as f64;
                SpacetimePoint::new(0.5 * rad, vec![rad, 0.0, 0.0])
            })
            .collect();
        let chat = calibrate_decay_ratio(&c, t, eps, &train).unwrap();
        assert!(chat >= c.norm_sq / (t * t));
        let test: Vec<SpacetimePoint> = (0..9)
            .map(|k| {
                let rad = 0.52 + 0.25 * k as f64;
                SpacetimePoint::new(0.5 * rad, vec![0.0, rad, 0.0])
            })
            .collect();
        let margins = spacelike_margins(&c, chat, t, eps, &test).unwrap();
        for (x, m, margin) in &margins {
            assert!(
                *margin >= -0.05 * c.norm_sq,
                "margin {margin} (modulus {m}) at |x| = {}",
                x.spatial_norm()
            );
        }
        // timelike points are rejected
        let bad = vec![SpacetimePoint::new(2.0, vec![1.0, 0.0, 0.0])];
        assert!(spacelike_margins(&c, chat, t, eps, &bad).is_err());
    }
}
