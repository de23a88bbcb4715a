//! Discretized single-particle Hilbert space L²(ℝˢ) in momentum representation.
//!
//! Momentum points live on a uniform cubic grid with `n` points per axis and
//! cutoff `pmax`. The half-shifted layout `p_k = (k + 1/2)Δ − pmax` contains no
//! zero-momentum point (so negative powers of ω(p⃗) = |p⃗| stay finite) and is
//! invariant under p⃗ ↦ −p⃗, which lets the configuration-space conjugation J
//! close on the grid. Configuration space is the DFT-dual grid; both transforms
//! use the symmetric (2π)^{-s/2} convention and are exactly unitary with the
//! quadrature weights Δˢ and δxˢ.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Build parameters for a momentum grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spatial dimension s.
    pub s: usize,
    /// Points per axis (even).
    pub n: usize,
    /// Momentum cutoff: coordinates range over (−pmax, pmax).
    pub pmax: f64,
    /// Place points at p_k = (k + 1/2)Δ − pmax instead of kΔ − pmax.
    pub half_shift: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { s: 3, n: 32, pmax: 8.0, half_shift: true }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.s < 2 {
            return Err(Error::Grid(format!("spatial dimension s = {} < 2", self.s)));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::Grid(format!("points per axis n = {} must be even and >= 2", self.n)));
        }
        if !(self.pmax > 0.0) {
            return Err(Error::Grid(format!("momentum cutoff pmax = {} must be positive", self.pmax)));
        }
        Ok(())
    }
}

/// A point (x⁰, x⃗) of spacetime; `x` has the grid's spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        SpacetimePoint { t, x }
    }

    /// Purely spatial point at time zero.
    pub fn spatial(x: Vec<f64>) -> Self {
        SpacetimePoint { t: 0.0, x }
    }

    /// From a flat `[x0, x1, …, xs]` slice.
    pub fn from_slice(c: &[f64]) -> Self {
        SpacetimePoint { t: c[0], x: c[1..].to_vec() }
    }

    pub fn zero(s: usize) -> Self {
        SpacetimePoint { t: 0.0, x: vec![0.0; s] }
    }

    pub fn spatial_norm(&self) -> f64 {
        self.x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Componentwise difference self − other.
    pub fn sub(&self, other: &Self) -> Self {
        SpacetimePoint {
            t: self.t - other.t,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        SpacetimePoint {
            t: self.t + other.t,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        SpacetimePoint { t: -self.t, x: self.x.iter().map(|c| -c).collect() }
    }
}

/// Discretized momentum space with quadrature weights, the p⃗ ↦ −p⃗ permutation
/// and cached FFT plans for the config ↔ momentum transforms.
pub struct MomentumGrid {
    spec: GridSpec,
    len: usize,
    delta: f64,
    dx: f64,
    axis_p: Vec<f64>,
    axis_x: Vec<f64>,
    omega: Vec<f64>,
    pcoords: Vec<f64>,
    xcoords: Vec<f64>,
    reflect: Vec<u32>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    tw_config: Vec<Complex64>,
    tw_momentum: Vec<Complex64>,
    cfwd: Complex64,
    cinv: Complex64,
}

impl std::fmt::Debug for MomentumGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentumGrid")
            .field("spec", &self.spec)
            .field("len", &self.len)
            .finish()
    }
}

/// Build a grid from its spec; precomputes coordinates, ω, the reflection
/// permutation and FFT plans.
pub fn build_grid(spec: GridSpec) -> Result<Arc<MomentumGrid>> {
    spec.validate()?;
    let (s, n) = (spec.s, spec.n);
    let len = n.checked_pow(s as u32).ok_or_else(|| Error::Grid("grid size overflow".into()))?;
    let delta = 2.0 * spec.pmax / n as f64;
    let dx = 2.0 * std::f64::consts::PI / (n as f64 * delta);
    let alpha = if spec.half_shift { 0.5 - n as f64 / 2.0 } else { -(n as f64) / 2.0 };
    let beta = -(n as f64) / 2.0;

    let axis_p: Vec<f64> = (0..n).map(|k| (k as f64 + alpha) * delta).collect();
    let axis_x: Vec<f64> = (0..n).map(|j| (j as f64 + beta) * dx).collect();

    let mut pcoords = vec![0.0; len * s];
    let mut xcoords = vec![0.0; len * s];
    let mut omega = vec![0.0; len];
    let mut reflect = vec![0u32; len];
    for i in 0..len {
        let mut rest = i;
        let mut w2 = 0.0;
        let mut ri = 0usize;
        let mut stride = 1usize;
        for a in 0..s {
            let k = rest % n;
            rest /= n;
            let p = axis_p[k];
            pcoords[i * s + a] = p;
            xcoords[i * s + a] = axis_x[k];
            w2 += p * p;
            let rk = if spec.half_shift { n - 1 - k } else { (n - k) % n };
            ri += rk * stride;
            stride *= n;
        }
        omega[i] = w2.sqrt();
        reflect[i] = ri as u32;
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let tau = -2.0 * std::f64::consts::PI / n as f64;
    let tw_config: Vec<Complex64> =
        (0..n).map(|j| Complex64::from_polar(1.0, tau * alpha * j as f64)).collect();
    let tw_momentum: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(1.0, tau * beta * k as f64)).collect();
    let c0 = Complex64::from_polar(1.0, tau * alpha * beta);
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    let cfwd = c0 * norm * dx;
    let cinv = c0.conj() * norm * delta;

    Ok(Arc::new(MomentumGrid {
        spec,
        len,
        delta,
        dx,
        axis_p,
        axis_x,
        omega,
        pcoords,
        xcoords,
        reflect,
        fwd,
        inv,
        tw_config,
        tw_momentum,
        cfwd,
        cinv,
    }))
}

impl MomentumGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn s(&self) -> usize {
        self.spec.s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Momentum spacing Δ.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Configuration spacing δx = 2π/(nΔ).
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Momentum quadrature weight Δˢ.
    pub fn weight(&self) -> f64 {
        self.delta.powi(self.spec.s as i32)
    }

    /// Configuration quadrature weight δxˢ.
    pub fn config_weight(&self) -> f64 {
        self.dx.powi(self.spec.s as i32)
    }

    /// ω(p⃗) = |p⃗| at every grid point.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn min_omega(&self) -> f64 {
        self.omega.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Momentum coordinates of point `i` (length s).
    pub fn momentum_point(&self, i: usize) -> &[f64] {
        &self.pcoords[i * self.spec.s..(i + 1) * self.spec.s]
    }

    /// Configuration coordinates of point `i` (length s).
    pub fn config_point(&self, i: usize) -> &[f64] {
        &self.xcoords[i * self.spec.s..(i + 1) * self.spec.s]
    }

    /// |x⃗| of configuration point `i`.
    pub fn config_radius(&self, i: usize) -> f64 {
        self.config_point(i).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn axis_momenta(&self) -> &[f64] {
        &self.axis_p
    }

    pub fn axis_positions(&self) -> &[f64] {
        &self.axis_x
    }

    /// Index of the reflected point −p⃗ (an involution).
    pub fn reflect_index(&self, i: usize) -> usize {
        self.reflect[i] as usize
    }

    /// Half the periodic box in configuration space, πn/(2·pmax). Spatial
    /// claims beyond this radius are contaminated by wrap-around.
    pub fn wrap_limit(&self) -> f64 {
        std::f64::consts::PI * self.spec.n as f64 / (2.0 * self.spec.pmax)
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let (s, n) = (self.spec.s, self.spec.n);
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut line = vec![Complex64::ZERO; n];
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        let mut stride = 1usize;
        for _ in 0..s {
            let block = stride * n;
            let outer = self.len / block;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * block + inner;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[base + t * stride];
                    }
                    if forward {
                        for (j, v) in line.iter_mut().enumerate() {
                            *v *= self.tw_config[j];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (k, v) in line.iter_mut().enumerate() {
                            *v *= self.tw_momentum[k] * self.cfwd;
                        }
                    } else {
                        for (k, v) in line.iter_mut().enumerate() {
                            *v *= self.tw_momentum[k].conj();
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (j, v) in line.iter_mut().enumerate() {
                            *v *= self.tw_config[j].conj() * self.cinv;
                        }
                    }
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * stride] = *v;
                    }
                }
            }
            stride = block;
        }
    }
}

/// A single-particle vector in momentum representation over a shared grid.
#[derive(Clone)]
pub struct SingleParticleVector {
    grid: Arc<MomentumGrid>,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for SingleParticleVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingleParticleVector")
            .field("len", &self.values.len())
            .field("norm", &self.norm())
            .finish()
    }
}

impl SingleParticleVector {
    pub fn new(grid: Arc<MomentumGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "vector length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Shape("non-finite vector entry".into()));
        }
        Ok(SingleParticleVector { grid, values })
    }

    pub fn zero(grid: Arc<MomentumGrid>) -> Self {
        let len = grid.len();
        SingleParticleVector { grid, values: vec![Complex64::ZERO; len] }
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// ⟨self|other⟩ with the momentum quadrature weight (conjugate-linear in self).
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.conj() * b;
        }
        acc * self.grid.weight()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        SingleParticleVector {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// self + c·other.
    pub fn add_scaled(&self, c: Complex64, other: &Self) -> Self {
        SingleParticleVector {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }
}

/// Pointwise phase multiplication by e^{i(ω(p⃗)x⁰ − p⃗·x⃗)}; exactly norm-preserving.
pub fn translate(f: &SingleParticleVector, x: &SpacetimePoint) -> Result<SingleParticleVector> {
    let grid = f.grid();
    let s = grid.s();
    if x.x.len() != s {
        return Err(Error::Shape(format!(
            "spacetime point has {} spatial components, grid has {}",
            x.x.len(),
            s
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, v) in f.values().iter().enumerate() {
        let p = grid.momentum_point(i);
        let mut phase = grid.omega()[i] * x.t;
        for a in 0..s {
            phase -= p[a] * x.x[a];
        }
        values.push(v * Complex64::from_polar(1.0, phase));
    }
    Ok(SingleParticleVector { grid: grid.clone(), values })
}

/// The conjugation J (complex conjugation in configuration space): in momentum
/// representation f̃(p⃗) ↦ conj(f̃(−p⃗)). Antilinear involution.
pub fn conjugate_j(f: &SingleParticleVector) -> SingleParticleVector {
    let grid = f.grid().clone();
    let values = (0..grid.len())
        .map(|i| f.values()[grid.reflect_index(i)].conj())
        .collect();
    SingleParticleVector { grid, values }
}

/// Inverse transform to configuration space samples on the dual grid.
pub fn to_config(f: &SingleParticleVector) -> Vec<Complex64> {
    let mut data = f.values().to_vec();
    f.grid().transform(&mut data, false);
    data
}

/// Forward transform of configuration samples into a momentum vector.
pub fn to_momentum(grid: &Arc<MomentumGrid>, config: &[Complex64]) -> Result<SingleParticleVector> {
    if config.len() != grid.len() {
        return Err(Error::Shape(format!(
            "config data length {} does not match grid size {}",
            config.len(),
            grid.len()
        )));
    }
    let mut data = config.to_vec();
    grid.transform(&mut data, true);
    SingleParticleVector::new(grid.clone(), data)
}

/// A multiplication operator in momentum space.
#[derive(Clone)]
pub struct DiagonalOperator {
    grid: Arc<MomentumGrid>,
    symbol: Vec<Complex64>,
    tag: String,
}

impl std::fmt::Debug for DiagonalOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DiagonalOperator({})", self.tag)
    }
}

impl DiagonalOperator {
    pub fn from_real_fn(
        grid: &Arc<MomentumGrid>,
        tag: impl Into<String>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Self {
        let symbol = (0..grid.len())
            .map(|i| Complex64::new(f(grid.momentum_point(i)), 0.0))
            .collect();
        DiagonalOperator { grid: grid.clone(), symbol, tag: tag.into() }
    }

    pub fn from_real_values(grid: &Arc<MomentumGrid>, tag: impl Into<String>, v: Vec<f64>) -> Self {
        let symbol = v.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        DiagonalOperator { grid: grid.clone(), symbol, tag: tag.into() }
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn apply(&self, f: &SingleParticleVector) -> Result<SingleParticleVector> {
        if !Arc::ptr_eq(&self.grid, f.grid()) && self.grid.len() != f.grid().len() {
            return Err(Error::Shape("operator and vector live on different grids".into()));
        }
        let values = self
            .symbol
            .iter()
            .zip(f.values())
            .map(|(s, v)| s * v)
            .collect();
        Ok(SingleParticleVector { grid: f.grid().clone(), values })
    }

    /// Pointwise product of symbols.
    pub fn compose(&self, other: &DiagonalOperator) -> DiagonalOperator {
        let symbol = self
            .symbol
            .iter()
            .zip(&other.symbol)
            .map(|(a, b)| a * b)
            .collect();
        DiagonalOperator {
            grid: self.grid.clone(),
            symbol,
            tag: format!("{}*{}", self.tag, other.tag),
        }
    }
}

/// The multiplication operator ω^a = |p⃗|^a. Negative exponents require a grid
/// without a zero-momentum point (half-shifted).
pub fn omega_power(grid: &Arc<MomentumGrid>, a: f64) -> Result<DiagonalOperator> {
    if a < 0.0 && grid.min_omega() == 0.0 {
        return Err(Error::Param(format!(
            "omega^{} undefined: grid contains p = 0 (use a half-shifted grid)",
            a
        )));
    }
    let symbol = grid
        .omega()
        .iter()
        .map(|&w| Complex64::new(if a == 0.0 { 1.0 } else { w.powf(a) }, 0.0))
        .collect();
    Ok(DiagonalOperator { grid: grid.clone(), symbol, tag: format!("omega^{a}") })
}

/// Indicator of the energy ball {ω(p⃗) ≤ e_max} (the single-particle spectral
/// projection of ω).
pub fn energy_ball(grid: &Arc<MomentumGrid>, e_max: f64) -> DiagonalOperator {
    let symbol = grid
        .omega()
        .iter()
        .map(|&w| Complex64::new(if w <= e_max { 1.0 } else { 0.0 }, 0.0))
        .collect();
    DiagonalOperator { grid: grid.clone(), symbol, tag: format!("Q_{e_max}") }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn small_grid() -> Arc<MomentumGrid> {
        build_grid(GridSpec { s: 3, n: 4, pmax: 2.0, half_shift: true }).unwrap()
    }

    fn random_vector(grid: &Arc<MomentumGrid>, seed: u64) -> SingleParticleVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        SingleParticleVector::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn half_shift_grid_has_no_origin() {
        let g = small_grid();
        assert_eq!(g.len(), 64);
        assert!(g.omega().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_grid(GridSpec { s: 3, n: 5, pmax: 2.0, half_shift: true }).is_err());
        assert!(build_grid(GridSpec { s: 3, n: 4, pmax: 0.0, half_shift: true }).is_err());
        assert!(build_grid(GridSpec { s: 1, n: 4, pmax: 2.0, half_shift: true }).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        for half in [true, false] {
            let g = build_grid(GridSpec { s: 2, n: 6, pmax: 3.0, half_shift: half }).unwrap();
            for i in 0..g.len() {
                let r = g.reflect_index(i);
                assert_eq!(g.reflect_index(r), i);
                let p = g.momentum_point(i);
                let q = g.momentum_point(r);
                for a in 0..2 {
                    // non-half-shift edge point −pmax reflects onto itself
                    if half || p[a] != -3.0 {
                        assert_relative_eq!(q[a], -p[a], max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn min_momentum_by_enumeration() {
        // independent oracle: scan all points of the n=32, pmax=8 grid
        let g = build_grid(GridSpec { s: 3, n: 32, pmax: 8.0, half_shift: true }).unwrap();
        let min_enum = (0..g.len())
            .map(|i| g.momentum_point(i).iter().map(|p| p * p).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min_enum, 0.25 * 3.0_f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(g.min_omega(), min_enum, max_relative = 1e-14);
    }

    #[test]
    fn omega_power_basics() {
        let g = small_grid();
        let id = omega_power(&g, 0.0).unwrap();
        assert!(id.symbol().iter().all(|s| (s - Complex64::ONE).norm() == 0.0));
        let w1 = omega_power(&g, 1.0).unwrap();
        for i in 0..g.len() {
            assert_relative_eq!(w1.symbol()[i].re, g.omega()[i], max_relative = 1e-15);
        }
        // exponents add pointwise exactly
        let a = omega_power(&g, 0.7).unwrap();
        let b = omega_power(&g, -0.2).unwrap();
        let ab = a.compose(&b);
        let c = omega_power(&g, 0.5).unwrap();
        for i in 0..g.len() {
            assert_relative_eq!(ab.symbol()[i].re, c.symbol()[i].re, max_relative = 1e-12);
        }
    }

    #[test]
    fn omega_negative_power_needs_half_shift() {
        let g = build_grid(GridSpec { s: 2, n: 4, pmax: 2.0, half_shift: false }).unwrap();
        assert_eq!(g.min_omega(), 0.0);
        assert!(omega_power(&g, -0.5).is_err());
    }

    #[test]
    fn omega_power_quadrature_oracle() {
        // ‖ω^{-1/2} f‖ against a direct pointwise sum
        let g = small_grid();
        let f = random_vector(&g, 3);
        let op = omega_power(&g, -0.5).unwrap();
        let wf = op.apply(&f).unwrap();
        let direct: f64 = (0..g.len())
            .map(|i| f.values()[i].norm_sqr() / g.omega()[i])
            .sum::<f64>()
            * g.weight();
        assert_relative_eq!(wf.norm_sq(), direct, max_relative = 1e-12);
    }

    #[test]
    fn translate_identity_and_unitarity() {
        let g = small_grid();
        let f = random_vector(&g, 7);
        let same = translate(&f, &SpacetimePoint::zero(3)).unwrap();
        for i in 0..g.len() {
            assert_relative_eq!((same.values()[i] - f.values()[i]).norm(), 0.0, epsilon = 1e-15);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = SpacetimePoint::new(
                rng.random::<f64>() - 0.5,
                (0..3).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect(),
            );
            let tf = translate(&f, &x).unwrap();
            assert_relative_eq!(tf.norm(), f.norm(), max_relative = 1e-13);
        }
    }

    #[test]
    fn translate_single_point_phase() {
        // f supported on one grid point: ⟨f|U(x)f⟩ = e^{i(ω x⁰ − p⃗·x⃗)} |f(p⃗)|² Δˢ
        let g = small_grid();
        let idx = 21;
        let mut values = vec![Complex64::ZERO; g.len()];
        values[idx] = Complex64::new(1.3, -0.4);
        let f = SingleParticleVector::new(g.clone(), values).unwrap();
        let x = SpacetimePoint::new(0.7, vec![0.3, -1.1, 0.5]);
        let got = f.inner(&translate(&f, &x).unwrap());
        let p = g.momentum_point(idx);
        let phase = g.omega()[idx] * x.t - p[0] * x.x[0] - p[1] * x.x[1] - p[2] * x.x[2];
        let expect = Complex64::from_polar(1.0, phase) * f.values()[idx].norm_sqr() * g.weight();
        assert_relative_eq!((got - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn translate_is_additive() {
        let g = small_grid();
        let f = random_vector(&g, 13);
        let x = SpacetimePoint::new(0.4, vec![1.0, -0.3, 0.2]);
        let y = SpacetimePoint::new(-0.9, vec![0.1, 0.8, -0.6]);
        let a = translate(&translate(&f, &x).unwrap(), &y).unwrap();
        let b = translate(&f, &x.add(&y)).unwrap();
        let diff: f64 = a.sub(&b).norm();
        assert!(diff <= 1e-12 * f.norm(), "diff = {diff}");
    }

    #[test]
    fn conjugation_fixes_real_even_vectors() {
        let g = small_grid();
        // real, reflection-even coefficients are J-invariant
        let values: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let w = g.omega()[i];
                Complex64::new((-w * w).exp(), 0.0)
            })
            .collect();
        let f = SingleParticleVector::new(g.clone(), values).unwrap();
        let jf = conjugate_j(&f);
        assert!(jf.sub(&f).norm() < 1e-14);
    }

    #[test]
    fn conjugation_is_antilinear_involution() {
        let g = small_grid();
        let f = random_vector(&g, 17);
        let jjf = conjugate_j(&conjugate_j(&f));
        assert!(jjf.sub(&f).norm() < 1e-14);
        let jf_i = conjugate_j(&f.scaled(Complex64::i()));
        let want = conjugate_j(&f).scaled(-Complex64::i());
        assert!(jf_i.sub(&want).norm() < 1e-14);
    }

    #[test]
    fn conjugation_of_real_config_bump() {
        // momentum transform of a real configuration bump is J-invariant
        let g = small_grid();
        let config: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let r = g.config_radius(i);
                Complex64::new((-r * r).exp(), 0.0)
            })
            .collect();
        let f = to_momentum(&g, &config).unwrap();
        let jf = conjugate_j(&f);
        assert!(jf.sub(&f).norm() < 1e-12 * f.norm());
    }

    #[test]
    fn conjugation_intertwines_translations_by_time_reversal() {
        // J U(x⁰, x⃗) J = U(−x⁰, x⃗): J commutes with spatial translations and
        // reverses the time phase
        let g = small_grid();
        let f = random_vector(&g, 19);
        let x = SpacetimePoint::new(0.6, vec![0.4, -0.2, 1.0]);
        let lhs = conjugate_j(&translate(&conjugate_j(&f), &x).unwrap());
        let rhs = translate(&f, &SpacetimePoint::new(-x.t, x.x.clone())).unwrap();
        assert!(lhs.sub(&rhs).norm() <= 1e-12 * f.norm());
    }

    #[test]
    fn transforms_invert_each_other() {
        let g = small_grid();
        let f = random_vector(&g, 23);
        let back = to_momentum(&g, &to_config(&f)).unwrap();
        assert!(back.sub(&f).norm() <= 1e-10 * f.norm());
    }

    #[test]
    fn delta_config_vector_has_flat_momentum_modulus() {
        let g = small_grid();
        let mut config = vec![Complex64::ZERO; g.len()];
        config[5] = Complex64::new(1.0, 0.0);
        let f = to_momentum(&g, &config).unwrap();
        let m0 = f.values()[0].norm();
        for v in f.values() {
            assert_relative_eq!(v.norm(), m0, max_relative = 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn parseval_on_random_vectors(seed in 0u64..10_000) {
            let g = build_grid(GridSpec { s: 2, n: 8, pmax: 4.0, half_shift: true }).unwrap();
            let f = random_vector(&g, seed);
            let config = to_config(&f);
            let cnorm: f64 = config.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.config_weight();
            let rel = (cnorm - f.norm_sq()).abs() / f.norm_sq();
            prop_assert!(rel < 1e-10);
        }
    }
}
