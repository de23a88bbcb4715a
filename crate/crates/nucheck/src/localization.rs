//! Localization structure over a double-cone base of radius r: families of
//! compactly supported test functions, the subspaces L± = [ω^{∓1/2} D̃(O_r)],
//! the real subspace L = (1+J)L⁺ + (1−J)L⁻, the smearing function h with its
//! positivity certificate, smooth radial cutoffs, and the positive operator
//!
//!   T = (|T_{E,+}|² + |T_{E,−}|² + |T_{h,+}|² + |T_{h,−}|²)^{1/2},
//!
//! with T_{E,±} = ω^{-1/2} Q_E L± and T_{h,±} = ω^{-γ} h̃^{1/2} L±.
//!
//! Everything is assembled in bases of J-invariant vectors with real
//! combination coefficients, so all Gram matrices are real symmetric and the
//! eigenbasis of T is J-invariant by construction.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    energy_ball, omega_power, to_config, to_momentum, DiagonalOperator, MomentumGrid,
    SingleParticleVector,
};
use crate::linalg::{orthonormalize_real, sym_eigh_desc};

/// Which of the two localization subspaces a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationSign {
    /// L⁺ = [ω^{-1/2} D̃(O_r)]
    Plus,
    /// L⁻ = [ω^{+1/2} D̃(O_r)]
    Minus,
}

impl LocalizationSign {
    /// Exponent applied to the transformed test functions when generating the
    /// subspace.
    pub fn generator_exponent(self) -> f64 {
        match self {
            LocalizationSign::Plus => -0.5,
            LocalizationSign::Minus => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LocalizationSign::Plus => "plus",
            LocalizationSign::Minus => "minus",
        }
    }
}

/// Real configuration-space test functions supported in the ball of radius r:
/// the standard bump ψ(x⃗) = exp(−1/(1−|x⃗/r|²)) times low-order monomials and
/// cosine modulations. All members are real, so their momentum transforms are
/// J-invariant and the generated subspaces are closed under J.
pub struct TestFunctionFamily {
    pub radius: f64,
    members: Vec<Vec<Complex64>>,
    grid: Arc<MomentumGrid>,
}

fn monomials_of_degree(s: usize, d: usize) -> Vec<Vec<usize>> {
    // multisets of axes of size d, lexicographic
    fn rec(s: usize, d: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 0 {
            out.push(cur.clone());
            return;
        }
        for a in start..s {
            cur.push(a);
            rec(s, d - 1, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(s, d, 0, &mut Vec::new(), &mut out);
    out
}

impl TestFunctionFamily {
    /// The standard family of `m` members: bump × {monomials of degree ≤ 2,
    /// three cosine modulations, then higher-degree monomials as needed}.
    pub fn standard(grid: &Arc<MomentumGrid>, radius: f64, m: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Param(format!("family radius {radius} must be positive")));
        }
        if m == 0 {
            return Err(Error::EmptyFamily);
        }
        if radius >= grid.wrap_limit() {
            return Err(Error::Param(format!(
                "family radius {radius} reaches the periodic wrap limit {}",
                grid.wrap_limit()
            )));
        }
        let s = grid.s();
        let inside: usize = (0..grid.len())
            .filter(|&i| grid.config_radius(i) < radius)
            .count();
        if inside == 0 {
            return Err(Error::Param(format!(
                "no configuration grid point inside radius {radius}"
            )));
        }

        // modulator stream: monomials degree 0..2, cosines, degree 3, 4, ...
        enum Modulator {
            Monomial(Vec<usize>),
            Cosine(usize, f64),
        }
        let mut mods: Vec<Modulator> = Vec::new();
        for d in 0..=2 {
            for mono in monomials_of_degree(s, d) {
                mods.push(Modulator::Monomial(mono));
            }
        }
        let kappa = 2.0 * std::f64::consts::PI / radius;
        for a in 0..s.min(3) {
            mods.push(Modulator::Cosine(a, kappa));
        }
        let mut deg = 3;
        while mods.len() < m {
            for mono in monomials_of_degree(s, deg) {
                mods.push(Modulator::Monomial(mono));
            }
            deg += 1;
        }

        let mut members = Vec::with_capacity(m);
        for md in mods.iter().take(m) {
            let mut vals = vec![Complex64::ZERO; grid.len()];
            for (i, v) in vals.iter_mut().enumerate() {
                let x = grid.config_point(i);
                let rr = grid.config_radius(i) / radius;
                if rr < 1.0 {
                    let core = (-1.0 / (1.0 - rr * rr)).exp();
                    let modv = match md {
                        Modulator::Monomial(axes) => {
                            axes.iter().map(|&a| x[a] / radius).product::<f64>()
                        }
                        Modulator::Cosine(a, k) => (k * x[*a]).cos(),
                    };
                    *v = Complex64::new(core * modv, 0.0);
                }
            }
            members.push(vals);
        }
        Ok(TestFunctionFamily { radius, members, grid: grid.clone() })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    /// Configuration-space samples of member `k`.
    pub fn member_config(&self, k: usize) -> &[Complex64] {
        &self.members[k]
    }

    /// Momentum transforms ψ̃_k of all members.
    pub fn momentum_members(&self) -> Result<Vec<SingleParticleVector>> {
        self.members
            .iter()
            .map(|c| to_momentum(&self.grid, c))
            .collect()
    }

    /// Number of sampled members independent above `tol` (relative singular
    /// value), diagnosing how much of the family survives discretization.
    pub fn sample_rank(&self, tol: f64) -> Result<usize> {
        let (basis, _) = orthonormalize_real(&self.momentum_members()?, tol)?;
        Ok(basis.len())
    }
}

/// Orthonormal J-invariant basis spanning one localization subspace.
pub struct Subspace {
    pub sign: LocalizationSign,
    pub basis: Vec<SingleParticleVector>,
    pub svd_tolerance: f64,
    /// Singular values of the generating family before filtering.
    pub singular_values: Vec<f64>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, v: &SingleParticleVector) -> SingleParticleVector {
        let mut out = SingleParticleVector::zero(v.grid().clone());
        for b in &self.basis {
            out = out.add_scaled(b.inner(v), b);
        }
        out
    }
}

/// Builds L± from the family: generators ω^{∓1/2} ψ̃_k orthonormalized with
/// singular-value filtering at `tol`.
pub fn build_l_pm(
    grid: &Arc<MomentumGrid>,
    family: &TestFunctionFamily,
    sign: LocalizationSign,
    tol: f64,
) -> Result<Subspace> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let op = omega_power(grid, sign.generator_exponent())?;
    let mut gens = Vec::with_capacity(family.len());
    for psi in family.momentum_members()? {
        gens.push(op.apply(&psi)?);
    }
    let (basis, singular_values) = orthonormalize_real(&gens, tol)?;
    Ok(Subspace { sign, basis, svd_tolerance: tol, singular_values })
}

/// Real-orthonormal basis of the real-linear subspace L = (1+J)L⁺ + (1−J)L⁻.
///
/// With J-invariant bases {b⁺}, {b⁻} the two real families {b⁺} and {i·b⁻}
/// are automatically orthonormal for Re⟨·|·⟩, so L is their union.
pub struct RealSubspace {
    pub basis: Vec<SingleParticleVector>,
    pub plus_dim: usize,
    pub minus_dim: usize,
}

impl RealSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Real-orthogonal projection Σ_b b·Re⟨b|v⟩.
    pub fn project_real(&self, v: &SingleParticleVector) -> SingleParticleVector {
        let mut out = SingleParticleVector::zero(v.grid().clone());
        for b in &self.basis {
            out = out.add_scaled(Complex64::new(b.inner(v).re, 0.0), b);
        }
        out
    }
}

pub fn build_l_real(lp: &Subspace, lm: &Subspace) -> Result<RealSubspace> {
    let mut basis: Vec<SingleParticleVector> = lp.basis.clone();
    basis.extend(lm.basis.iter().map(|b| b.scaled(Complex64::i())));
    // verify the real Gram is the identity; rank loss means degenerate overlap
    let n = basis.len();
    for i in 0..n {
        for j in 0..n {
            let g = basis[i].inner(&basis[j]).re;
            let want = if i == j { 1.0 } else { 0.0 };
            if (g - want).abs() > 1e-8 {
                return Err(Error::RankDeficient(format!(
                    "real overlap matrix deviates from identity at ({i},{j}): {g}"
                )));
            }
        }
    }
    Ok(RealSubspace { basis, plus_dim: lp.dim(), minus_dim: lm.dim() })
}

/// The smearing function h: autocorrelation of the half-radius bump, so h is
/// real, supported in O_r, and h̃ = |ψ̃|² ≥ 0 pointwise. Normalized to
/// h̃(0) ≈ max h̃ = 1.
pub struct HFunction {
    pub radius: f64,
    pub e_max: f64,
    htilde: Vec<f64>,
    pub min_in_ball: f64,
    grid: Arc<MomentumGrid>,
}

impl HFunction {
    /// h̃ evaluated on the momentum grid.
    pub fn htilde(&self) -> &[f64] {
        &self.htilde
    }

    /// sup_{|p⃗| ≤ E} h̃(p⃗)^{-2} = (min_{|p⃗| ≤ E} h̃)^{-2}.
    pub fn sup_inv_sq(&self) -> f64 {
        self.min_in_ball.powi(-2)
    }

    /// sup_{|p⃗| ≤ E} h̃(p⃗)^{-1}.
    pub fn sup_inv(&self) -> f64 {
        self.min_in_ball.recip()
    }

    pub fn as_diagonal(&self) -> DiagonalOperator {
        DiagonalOperator::from_real_values(&self.grid, "htilde", self.htilde.clone())
    }

    /// h̃^{1/2} as a multiplication operator.
    pub fn sqrt_diagonal(&self) -> DiagonalOperator {
        DiagonalOperator::from_real_values(
            &self.grid,
            "htilde^1/2",
            self.htilde.iter().map(|v| v.sqrt()).collect(),
        )
    }

    /// Configuration-space samples of h.
    pub fn config_values(&self) -> Result<Vec<Complex64>> {
        let v = SingleParticleVector::new(
            self.grid.clone(),
            self.htilde.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )?;
        Ok(to_config(&v))
    }
}

/// Builds h for radius r and certifies h̃ > 0 on the energy ball {|p⃗| ≤ E}:
/// fails if the minimum drops below 1e-12.
pub fn choose_h(grid: &Arc<MomentumGrid>, r: f64, e_max: f64) -> Result<HFunction> {
    if !(r > 0.0) || !(e_max > 0.0) {
        return Err(Error::Param(format!("choose_h needs r > 0 and E > 0, got r={r}, E={e_max}")));
    }
    let half = 0.5 * r;
    let mut config = vec![Complex64::ZERO; grid.len()];
    for (i, v) in config.iter_mut().enumerate() {
        let rr = grid.config_radius(i) / half;
        if rr < 1.0 {
            *v = Complex64::new((-1.0 / (1.0 - rr * rr)).exp(), 0.0);
        }
    }
    let psi = to_momentum(grid, &config)?;
    let mut htilde: Vec<f64> = psi.values().iter().map(|z| z.norm_sqr()).collect();
    let peak = htilde.iter().cloned().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::Certificate("h vanishes identically on the grid".into()));
    }
    for v in htilde.iter_mut() {
        *v /= peak;
    }
    let min_in_ball = grid
        .omega()
        .iter()
        .zip(&htilde)
        .filter(|(w, _)| **w <= e_max)
        .map(|(_, h)| *h)
        .fold(f64::INFINITY, f64::min);
    if !(min_in_ball > 1e-12) {
        return Err(Error::Certificate(format!(
            "min of htilde on the energy ball is {min_in_ball:.3e} (need > 1e-12); \
             shrink E or refine the grid"
        )));
    }
    Ok(HFunction { radius: r, e_max, htilde, min_in_ball, grid: grid.clone() })
}

/// Radial configuration-space cutoff: exactly 1 on O_ρ, exactly 0 outside
/// O_{ρ+pad}, quintic smoothstep in between.
pub struct SmoothCutoff {
    pub rho: f64,
    pub pad: f64,
    values: Vec<f64>,
    grid: Arc<MomentumGrid>,
}

impl SmoothCutoff {
    pub fn new(grid: &Arc<MomentumGrid>, rho: f64, pad: f64) -> Result<Self> {
        if !(rho > 0.0) || !(pad > 0.0) {
            return Err(Error::Param(format!(
                "cutoff needs rho > 0 and pad > 0, got rho={rho}, pad={pad}"
            )));
        }
        let values = (0..grid.len())
            .map(|i| profile(grid.config_radius(i), rho, pad))
            .collect();
        Ok(SmoothCutoff { rho, pad, values, grid: grid.clone() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise multiplication in configuration space.
    pub fn apply_config(&self, data: &mut [Complex64]) {
        for (v, &c) in data.iter_mut().zip(&self.values) {
            *v *= c;
        }
    }

    /// The cutoff recentered at x⃗, evaluated over the configuration grid.
    pub fn shifted_values(&self, center: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let x = self.grid.config_point(i);
                let r = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                profile(r, self.rho, self.pad)
            })
            .collect()
    }

    /// Quadrature of |χ|: δxˢ Σ |χ(x_j)|.
    pub fn integral_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.config_weight()
    }
}

fn profile(r: f64, rho: f64, pad: f64) -> f64 {
    if r <= rho {
        1.0
    } else if r >= rho + pad {
        0.0
    } else {
        let u = (r - rho) / pad;
        1.0 - (6.0 * u.powi(5) - 15.0 * u.powi(4) + 10.0 * u.powi(3))
    }
}

/// Spectral data of T: eigenvalues t_j (descending, nonnegative) with
/// J-invariant eigenvectors, plus the component Gram matrices |T_c|² on the
/// joint basis of L⁺ ∪ L⁻ for subadditivity checks.
pub struct LocalizationSpectrum {
    pub e_max: f64,
    pub gamma: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<SingleParticleVector>,
    pub component_grams: Vec<DMatrix<f64>>,
    pub component_labels: Vec<&'static str>,
    component_symbols: Vec<Vec<f64>>,
    component_signs: Vec<LocalizationSign>,
    joint_basis: Vec<SingleParticleVector>,
    grid: Arc<MomentumGrid>,
}

/// Assembles T on the joint basis of L⁺ ∪ L⁻ and diagonalizes the real
/// symmetric T². Requires 1/2 ≤ γ < (s−1)/2 and E > 0.
pub fn build_t(
    grid: &Arc<MomentumGrid>,
    lp: &Subspace,
    lm: &Subspace,
    e_max: f64,
    gamma: f64,
    h: &HFunction,
) -> Result<LocalizationSpectrum> {
    let s = grid.s() as f64;
    if !(gamma >= 0.5 && gamma < (s - 1.0) / 2.0) {
        return Err(Error::Param(format!(
            "gamma = {gamma} outside the admissible range [1/2, (s-1)/2) for s = {s}"
        )));
    }
    if !(e_max > 0.0) {
        return Err(Error::Param(format!("E = {e_max} must be positive")));
    }

    let mut gens: Vec<SingleParticleVector> = lp.basis.clone();
    gens.extend(lm.basis.iter().cloned());
    let (joint_basis, _) = orthonormalize_real(&gens, 1e-10)?;
    let d = joint_basis.len();

    let qe = energy_ball(grid, e_max);
    let we = omega_power(grid, -0.5)?.compose(&qe);
    let wh = omega_power(grid, -gamma)?.compose(&h.sqrt_diagonal());
    let symbol_sq = |op: &DiagonalOperator| -> Vec<f64> {
        op.symbol().iter().map(|z| z.norm_sqr()).collect()
    };

    let components: Vec<(LocalizationSign, &DiagonalOperator, &'static str)> = vec![
        (LocalizationSign::Plus, &we, "T_{E,+}"),
        (LocalizationSign::Minus, &we, "T_{E,-}"),
        (LocalizationSign::Plus, &wh, "T_{h,+}"),
        (LocalizationSign::Minus, &wh, "T_{h,-}"),
    ];

    let mut component_grams = Vec::with_capacity(4);
    let mut component_labels = Vec::with_capacity(4);
    let mut component_symbols = Vec::with_capacity(4);
    let mut component_signs = Vec::with_capacity(4);
    let mut t2 = DMatrix::zeros(d, d);
    for (sign, op, label) in components {
        let sub = match sign {
            LocalizationSign::Plus => lp,
            LocalizationSign::Minus => lm,
        };
        let images: Vec<SingleParticleVector> = joint_basis
            .iter()
            .map(|b| op.apply(&sub.project(b)))
            .collect::<Result<_>>()?;
        let mut gram = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let g = images[i].inner(&images[j]).re;
                gram[(i, j)] = g;
                gram[(j, i)] = g;
            }
        }
        t2 += &gram;
        component_grams.push(gram);
        component_labels.push(label);
        component_symbols.push(symbol_sq(op));
        component_signs.push(sign);
    }

    let (lam, coeffs) = sym_eigh_desc(&t2);
    let eigenvalues: Vec<f64> = lam.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let eigenvectors: Vec<SingleParticleVector> = (0..d)
        .map(|k| {
            let mut e = joint_basis[0].scaled(Complex64::new(coeffs[(0, k)], 0.0));
            for j in 1..d {
                e = e.add_scaled(Complex64::new(coeffs[(j, k)], 0.0), &joint_basis[j]);
            }
            e
        })
        .collect();

    Ok(LocalizationSpectrum {
        e_max,
        gamma,
        eigenvalues,
        eigenvectors,
        component_grams,
        component_labels,
        component_symbols,
        component_signs,
        joint_basis,
        grid: grid.clone(),
    })
}

impl LocalizationSpectrum {
    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Σ_j t_j^p over the spectrum (p > 0).
    pub fn schatten(&self, p: f64) -> Result<f64> {
        schatten_p(&self.eigenvalues, p)
    }

    /// Eigenvalues of one component |T_c|² (descending, clamped at 0).
    pub fn component_eigenvalues(&self, c: usize) -> Vec<f64> {
        let (vals, _) = sym_eigh_desc(&self.component_grams[c]);
        vals.into_iter().map(|l| l.max(0.0)).collect()
    }

    /// Eigenvalues of |T_a|² + |T_b|² for a component pair.
    pub fn pair_sum_eigenvalues(&self, a: usize, b: usize) -> Vec<f64> {
        let sum = &self.component_grams[a] + &self.component_grams[b];
        let (vals, _) = sym_eigh_desc(&sum);
        vals.into_iter().map(|l| l.max(0.0)).collect()
    }

    /// T² applied to an arbitrary vector (through projections and symbols).
    pub fn apply_t2(
        &self,
        lp: &Subspace,
        lm: &Subspace,
        v: &SingleParticleVector,
    ) -> Result<SingleParticleVector> {
        let mut out = SingleParticleVector::zero(v.grid().clone());
        for (c, sym) in self.component_symbols.iter().enumerate() {
            let sub = match self.component_signs[c] {
                LocalizationSign::Plus => lp,
                LocalizationSign::Minus => lm,
            };
            let pv = sub.project(v);
            let op = DiagonalOperator::from_real_values(&self.grid, "sym^2", sym.clone());
            let mpv = op.apply(&pv)?;
            out = out.add_scaled(Complex64::ONE, &sub.project(&mpv));
        }
        Ok(out)
    }

    /// The 4d×d stacked matrix [G₁^{1/2}; …; G₄^{1/2}] whose singular values
    /// are the t_j; used as an independent route to the spectrum.
    pub fn stacked_component_matrix(&self) -> DMatrix<f64> {
        let d = self.joint_basis.len();
        let mut stacked = DMatrix::zeros(4 * d, d);
        for (c, gram) in self.component_grams.iter().enumerate() {
            let (vals, vecs) = sym_eigh_desc(gram);
            // symmetric square root
            let mut root = DMatrix::zeros(d, d);
            for k in 0..d {
                let s = vals[k].max(0.0).sqrt();
                let col = vecs.column(k);
                for i in 0..d {
                    for j in 0..d {
                        root[(i, j)] += s * col[i] * col[j];
                    }
                }
            }
            stacked.view_mut((c * d, 0), (d, d)).copy_from(&root);
        }
        stacked
    }
}

/// Σ t^p for a nonnegative spectrum; errors on p ≤ 0.
pub fn schatten_p(spectrum: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Param(format!("Schatten exponent p = {p} must be positive")));
    }
    Ok(spectrum.iter().map(|t| t.max(0.0).powf(p)).sum())
}

/// Subadditivity margin ‖A^p‖₁ + ‖B^p‖₁ − ‖(A+B)^p‖₁ for positive A, B given
/// by their eigenvalue lists and the combined spectrum.
pub fn kosaki_margin(a: &[f64], b: &[f64], sum: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Param(format!("subadditivity needs 0 < p <= 1, got {p}")));
    }
    Ok(schatten_p(a, p)? + schatten_p(b, p)? - schatten_p(sum, p)?)
}

/// Maximum relative residual of the identity L± = ω^{∓1/2} χ(O_2r) ω^{±1/2} L±
/// over the subspace basis. `cutoff` should sit at ρ = 2r. With exactly
/// supported generators the residual is at the roundoff level.
pub fn chil_identity_check(
    grid: &Arc<MomentumGrid>,
    sub: &Subspace,
    cutoff: Option<&SmoothCutoff>,
) -> Result<f64> {
    let outer = omega_power(grid, sub.sign.generator_exponent())?;
    let inner = omega_power(grid, -sub.sign.generator_exponent())?;
    let mut worst: f64 = 0.0;
    for v in &sub.basis {
        let up = inner.apply(v)?;
        let mut cfg = to_config(&up);
        if let Some(chi) = cutoff {
            chi.apply_config(&mut cfg);
        }
        let back = outer.apply(&to_momentum(grid, &cfg)?)?;
        let res = back.sub(v).norm() / v.norm();
        worst = worst.max(res);
    }
    Ok(worst)
}
