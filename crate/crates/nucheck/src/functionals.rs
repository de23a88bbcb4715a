//! The rank-one building blocks of the nuclear decomposition: normal-ordered
//! ladder monomials S_{μ̄ν̄}(φ) = φ(a*(Le)^{μ̄} a(Le)^{ν̄}) over the J-invariant
//! eigenbasis, the dual coefficients τ_{μ̄ν̄} evaluated on Weyl generators, and
//! the term-by-term expansion of φ(W(f)) they reproduce.
//!
//! Ladder arguments are compressed onto the active mode span; for normal-ordered
//! products evaluated between states supported on the span this is exact, since
//! annihilators of orthogonal components vanish on such states and created
//! orthogonal components drop out of every inner product.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{EnergyProjection, TruncatedFock};
use crate::grid::{conjugate_j, translate, SingleParticleVector, SpacetimePoint};
use crate::linalg::{operator_norm, PowerIterOptions};
use crate::localization::Subspace;

/// Occupation multi-indices (μ⁺, μ⁻), (ν̄⁺, ν̄⁻) over the eigenmode list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexPair {
    pub mu_plus: Vec<u8>,
    pub mu_minus: Vec<u8>,
    pub nu_plus: Vec<u8>,
    pub nu_minus: Vec<u8>,
}

fn total(v: &[u8]) -> usize {
    v.iter().map(|&k| k as usize).sum()
}

fn factorial(v: &[u8]) -> f64 {
    v.iter()
        .map(|&k| (1..=k as u64).map(|x| x as f64).product::<f64>())
        .product()
}

impl MultiIndexPair {
    pub fn zeros(modes: usize) -> Self {
        MultiIndexPair {
            mu_plus: vec![0; modes],
            mu_minus: vec![0; modes],
            nu_plus: vec![0; modes],
            nu_minus: vec![0; modes],
        }
    }

    /// |μ̄| = |μ⁺| + |μ⁻|.
    pub fn mu_total(&self) -> usize {
        total(&self.mu_plus) + total(&self.mu_minus)
    }

    /// |ν̄| = |ν⁺| + |ν⁻|.
    pub fn nu_total(&self) -> usize {
        total(&self.nu_plus) + total(&self.nu_minus)
    }

    /// |μ̄| + |ν̄|.
    pub fn order(&self) -> usize {
        self.mu_total() + self.nu_total()
    }

    /// μ̄! ν̄! = μ⁺! μ⁻! ν⁺! ν⁻!.
    pub fn factorial(&self) -> f64 {
        factorial(&self.mu_plus)
            * factorial(&self.mu_minus)
            * factorial(&self.nu_plus)
            * factorial(&self.nu_minus)
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 0
    }

    /// i^{|μ⁺| + |ν⁺| + 2|μ⁻|}.
    pub fn phase(&self) -> Complex64 {
        let k = total(&self.mu_plus) + total(&self.nu_plus) + 2 * total(&self.mu_minus);
        match k % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// A normal-ordered ladder monomial a*(g₁)…a*(g_m) a(h₁)…a(h_q) with mode-space
/// coefficient vectors as arguments.
pub struct SOperator {
    creations: Vec<Vec<Complex64>>,
    annihilations: Vec<Vec<Complex64>>,
}

impl SOperator {
    pub fn is_identity(&self) -> bool {
        self.creations.is_empty() && self.annihilations.is_empty()
    }

    pub fn apply(&self, fock: &TruncatedFock, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        for h in &self.annihilations {
            w = fock.apply_annihilate(h, &w);
        }
        for g in &self.creations {
            w = fock.apply_create(g, &w);
        }
        w
    }

    pub fn apply_adjoint(&self, fock: &TruncatedFock, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        for g in &self.creations {
            w = fock.apply_annihilate(g, &w);
        }
        for h in &self.annihilations {
            w = fock.apply_create(h, &w);
        }
        w
    }
}

/// Assembles S_{μ̄ν̄} with arguments L± e_j (optionally translated by x),
/// compressed onto the Fock mode span.
pub fn s_operator(
    fock: &TruncatedFock,
    lp: &Subspace,
    lm: &Subspace,
    eigenvectors: &[SingleParticleVector],
    pair: &MultiIndexPair,
    x: Option<&SpacetimePoint>,
) -> Result<SOperator> {
    let modes = eigenvectors.len();
    if pair.mu_plus.len() != modes
        || pair.mu_minus.len() != modes
        || pair.nu_plus.len() != modes
        || pair.nu_minus.len() != modes
    {
        return Err(Error::Shape(format!(
            "multi-index length does not match {modes} eigenmodes"
        )));
    }
    let arg = |sub: &Subspace, j: usize| -> Result<Vec<Complex64>> {
        let mut v = sub.project(&eigenvectors[j]);
        if let Some(point) = x {
            v = translate(&v, point)?;
        }
        Ok(fock.modes.project(&v).0)
    };
    let mut creations = Vec::new();
    let mut annihilations = Vec::new();
    for j in 0..modes {
        for _ in 0..pair.mu_plus[j] {
            creations.push(arg(lp, j)?);
        }
        for _ in 0..pair.mu_minus[j] {
            creations.push(arg(lm, j)?);
        }
        for _ in 0..pair.nu_plus[j] {
            annihilations.push(arg(lp, j)?);
        }
        for _ in 0..pair.nu_minus[j] {
            annihilations.push(arg(lm, j)?);
        }
    }
    Ok(SOperator { creations, annihilations })
}

/// Single-point norm ‖P_E A P_E‖. The empty monomial represents S_{0,0},
/// which annihilates every vacuum-subtracted functional, so its norm is 0.
pub fn s_single_norm(
    fock: &TruncatedFock,
    pe: &EnergyProjection,
    op: &SOperator,
    rng: &mut impl Rng,
) -> Result<f64> {
    if op.is_identity() {
        return Ok(0.0);
    }
    operator_norm(
        fock.dim(),
        |v| pe.apply(&op.apply(fock, &pe.apply(v))),
        |v| pe.apply(&op.apply_adjoint(fock, &pe.apply(v))),
        rng,
        PowerIterOptions::default(),
    )
}

/// The norm estimate E^{(|μ̄|+|ν̄|)/2} t^{μ̄} t^{ν̄}.
pub fn s_estimate_rhs(e_max: f64, eigenvalues: &[f64], pair: &MultiIndexPair) -> f64 {
    let mut value = e_max.powf(pair.order() as f64 / 2.0);
    for j in 0..eigenvalues.len() {
        let reps = pair.mu_plus[j] + pair.mu_minus[j] + pair.nu_plus[j] + pair.nu_minus[j];
        value *= eigenvalues[j].powi(reps as i32);
    }
    value
}

/// τ_{μ̄ν̄}(W(f)) = e^{-‖f‖²/2} i^{|μ⁺|+|ν⁺|+2|μ⁻|} ⟨e|f⁺⟩^{μ⁺+ν⁺} ⟨e|f⁻⟩^{μ⁻+ν⁻} / (μ̄! ν̄!),
/// the coefficient that makes the normal-ordered power series factor through
/// the eigenbasis term by term.
pub fn tau_on_weyl(
    pair: &MultiIndexPair,
    c_plus: &[f64],
    c_minus: &[f64],
    f_norm_sq: f64,
) -> Complex64 {
    let mut value = Complex64::new((-0.5 * f_norm_sq).exp(), 0.0) * pair.phase();
    for j in 0..c_plus.len() {
        let kp = (pair.mu_plus[j] + pair.nu_plus[j]) as i32;
        if kp > 0 {
            value *= Complex64::new(c_plus[j].powi(kp), 0.0);
        }
        let km = (pair.mu_minus[j] + pair.nu_minus[j]) as i32;
        if km > 0 {
            value *= Complex64::new(c_minus[j].powi(km), 0.0);
        }
    }
    value / Complex64::new(pair.factorial(), 0.0)
}

/// The norm majorant 2^{(5/2)(|μ̄|+|ν̄|)} / (μ̄! ν̄!)^{1/2}; sampled values of
/// |τ(W(f))| must stay below it.
pub fn tau_estimate_rhs(pair: &MultiIndexPair) -> f64 {
    (2.0f64).powf(2.5 * pair.order() as f64) / pair.factorial().sqrt()
}

/// Splitting of f ∈ L into J-invariant parts f = f⁺ + i f⁻ with the real
/// eigenbasis coefficients c±_j = ⟨e_j|f±⟩.
pub struct RealDecomposition {
    pub f_plus: SingleParticleVector,
    pub f_minus: SingleParticleVector,
    pub c_plus: Vec<f64>,
    pub c_minus: Vec<f64>,
    pub norm_sq: f64,
    /// Largest imaginary part encountered in the coefficients (roundoff gauge).
    pub max_imag: f64,
}

pub fn decompose_in_l(
    f: &SingleParticleVector,
    eigenvectors: &[SingleParticleVector],
) -> Result<RealDecomposition> {
    let jf = conjugate_j(f);
    let half = Complex64::new(0.5, 0.0);
    let f_plus = f.add_scaled(Complex64::ONE, &jf).scaled(half);
    let f_minus = f.sub(&jf).scaled(Complex64::new(0.0, -0.5));
    let mut c_plus = Vec::with_capacity(eigenvectors.len());
    let mut c_minus = Vec::with_capacity(eigenvectors.len());
    let mut max_imag: f64 = 0.0;
    for e in eigenvectors {
        let cp = e.inner(&f_plus);
        let cm = e.inner(&f_minus);
        max_imag = max_imag.max(cp.im.abs()).max(cm.im.abs());
        c_plus.push(cp.re);
        c_minus.push(cm.re);
    }
    if max_imag > 1e-8 * (1.0 + f.norm()) {
        return Err(Error::Param(format!(
            "decomposition coefficients not real: max imaginary part {max_imag:.3e} \
             (f outside the real subspace, or eigenvectors not J-invariant)"
        )));
    }
    Ok(RealDecomposition { f_plus, f_minus, c_plus, c_minus, norm_sq: f.norm_sq(), max_imag })
}

/// Finite-rank functional Σ_r w_r |ψ_r⟩⟨ψ'_r| on the truncated Fock space,
/// evaluated in vacuum-subtracted form: φ̊(A) = Σ w (⟨ψ'|Aψ⟩ − ⟨ψ'|ψ⟩⟨Ω|AΩ⟩).
pub struct FiniteRankFunctional {
    pub terms: Vec<(Complex64, Vec<Complex64>, Vec<Complex64>)>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl FiniteRankFunctional {
    pub fn rank_one(psi: Vec<Complex64>, psi_prime: Vec<Complex64>) -> Self {
        FiniteRankFunctional { terms: vec![(Complex64::ONE, psi, psi_prime)] }
    }

    /// φ̊(A) for A given as a matvec closure.
    pub fn eval(
        &self,
        fock: &TruncatedFock,
        apply_a: impl Fn(&[Complex64]) -> Vec<Complex64>,
    ) -> Complex64 {
        let vac = fock.vacuum();
        let vacuum_value = dot(&vac, &apply_a(&vac));
        let mut acc = Complex64::ZERO;
        for (w, psi, psi_prime) in &self.terms {
            let apsi = apply_a(psi);
            acc += w * (dot(psi_prime, &apsi) - dot(psi_prime, psi) * vacuum_value);
        }
        acc
    }

    /// Largest total occupation carried by any state entering the functional.
    pub fn max_particle_number(&self, fock: &TruncatedFock) -> usize {
        let mut worst = 0usize;
        for (_, psi, psi_prime) in &self.terms {
            for v in [psi, psi_prime] {
                for (idx, amp) in v.iter().enumerate() {
                    if amp.norm_sqr() > 1e-28 {
                        let n = fock.occupations()[idx].iter().map(|&k| k as usize).sum();
                        worst = worst.max(n);
                    }
                }
            }
        }
        worst
    }
}

/// Partial sums of φ(W(f)) = Σ τ_{μ̄ν̄}(W(f)) S_{μ̄ν̄}(φ) against the directly
/// evaluated left side.
#[derive(Debug, Clone)]
pub struct ExpansionCheck {
    pub direct: Complex64,
    /// Cumulative sums over |μ̄|+|ν̄| ≤ k for k = 0..=K.
    pub partial_sums: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub terms_evaluated: usize,
}

fn multi_indices(slots: usize, degree: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; slots];
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
        if slot == cur.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur[slot] = k as u8;
            rec(out, cur, slot + 1, left - k);
        }
        cur[slot] = 0;
    }
    rec(&mut out, &mut cur, 0, degree);
    out
}

/// Runs the expansion check for a functional φ on the truncated Fock space and
/// an argument f ∈ L (in the mode span). The enumeration over (μ̄, ν̄) uses the
/// particle content of φ to discard vanishing matrix elements; the remaining
/// term count must stay below an internal budget.
#[allow(clippy::too_many_arguments)]
pub fn expansion_check(
    fock: &TruncatedFock,
    phi: &FiniteRankFunctional,
    f: &SingleParticleVector,
    lp: &Subspace,
    lm: &Subspace,
    eigenvectors: &[SingleParticleVector],
    k_cutoff: usize,
    span_tol: f64,
) -> Result<ExpansionCheck> {
    let f_coeffs = fock.modes.project_strict(f, span_tol)?;
    let direct = phi.eval(fock, |v| crate::fock::apply_weyl(fock, &f_coeffs, v));

    let dec = decompose_in_l(f, eigenvectors)?;
    // membership in L: the J-even part must lie in L⁺, the J-odd part in L⁻
    for (part, sub, label) in
        [(&dec.f_plus, lp, "f⁺ outside L⁺"), (&dec.f_minus, lm, "f⁻ outside L⁻")]
    {
        let norm = part.norm();
        if norm > 0.0 {
            let res = part.sub(&sub.project(part)).norm() / norm;
            if res > span_tol.max(1e-10) {
                return Err(Error::Param(format!(
                    "{label}: relative residual {res:.3e} (f must lie in the real subspace L)"
                )));
            }
        }
    }
    let d = eigenvectors.len();
    let p_ket = phi.max_particle_number(fock).min(fock.n_max);
    let p_bra = p_ket;

    // split multi-index (μ⁺, μ⁻) ↔ one vector over 2d slots
    let mut mu_list: Vec<Vec<u8>> = Vec::new();
    for m in 0..=p_bra.min(k_cutoff) {
        mu_list.extend(multi_indices(2 * d, m));
    }
    let mut nu_list: Vec<Vec<u8>> = Vec::new();
    for m in 0..=p_ket.min(k_cutoff) {
        nu_list.extend(multi_indices(2 * d, m));
    }
    let budget = 2_000_000usize;
    if mu_list.len().saturating_mul(nu_list.len()) > budget {
        return Err(Error::Param(format!(
            "expansion enumeration too large: {} × {} terms for {} eigenmodes \
             (reduce the cutoff or the functional's particle content)",
            mu_list.len(),
            nu_list.len(),
            d
        )));
    }

    // precompute compressed ladder arguments L± e_j
    let arg_plus: Vec<Vec<Complex64>> = eigenvectors
        .iter()
        .map(|e| fock.modes.project(&lp.project(e)).0)
        .collect();
    let arg_minus: Vec<Vec<Complex64>> = eigenvectors
        .iter()
        .map(|e| fock.modes.project(&lm.project(e)).0)
        .collect();

    let mut order_sums = vec![Complex64::ZERO; k_cutoff + 1];
    let mut terms_evaluated = 0usize;
    for mu in &mu_list {
        let mu_tot = total(mu);
        for nu in &nu_list {
            let order = mu_tot + total(nu);
            if order > k_cutoff {
                continue;
            }
            let pair = MultiIndexPair {
                mu_plus: mu[..d].to_vec(),
                mu_minus: mu[d..].to_vec(),
                nu_plus: nu[..d].to_vec(),
                nu_minus: nu[d..].to_vec(),
            };
            let tau = tau_on_weyl(&pair, &dec.c_plus, &dec.c_minus, dec.norm_sq);
            if tau.norm_sqr() < 1e-60 {
                continue;
            }
            let op = SOperator {
                creations: collect_args(&pair.mu_plus, &pair.mu_minus, &arg_plus, &arg_minus),
                annihilations: collect_args(&pair.nu_plus, &pair.nu_minus, &arg_plus, &arg_minus),
            };
            let s_val = phi.eval(fock, |v| op.apply(fock, v));
            order_sums[order] += tau * s_val;
            terms_evaluated += 1;
        }
    }

    let mut partial_sums = Vec::with_capacity(k_cutoff + 1);
    let mut residuals = Vec::with_capacity(k_cutoff + 1);
    let mut acc = Complex64::ZERO;
    for k in 0..=k_cutoff {
        acc += order_sums[k];
        partial_sums.push(acc);
        residuals.push((acc - direct).norm());
    }
    Ok(ExpansionCheck { direct, partial_sums, residuals, terms_evaluated })
}

fn collect_args(
    plus: &[u8],
    minus: &[u8],
    arg_plus: &[Vec<Complex64>],
    arg_minus: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    for (j, &k) in plus.iter().enumerate() {
        for _ in 0..k {
            out.push(arg_plus[j].clone());
        }
    }
    for (j, &k) in minus.iter().enumerate() {
        for _ in 0..k {
            out.push(arg_minus[j].clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_fock, energy_projection, mode_set, weyl_matrix};
    use crate::grid::{build_grid, GridSpec, MomentumGrid};
    use crate::localization::{
        build_l_pm, build_t, choose_h, LocalizationSign, LocalizationSpectrum,
        TestFunctionFamily,
    };
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::sync::Arc;

    struct Setup {
        grid: Arc<MomentumGrid>,
        lp: Subspace,
        lm: Subspace,
        spec: LocalizationSpectrum,
        fock: TruncatedFock,
    }

    fn setup(n_max: usize) -> Setup {
        let grid = build_grid(GridSpec { s: 3, n: 8, pmax: 4.0, half_shift: true }).unwrap();
        let fam = TestFunctionFamily::standard(&grid, 1.0, 2).unwrap();
        let lp = build_l_pm(&grid, &fam, LocalizationSign::Plus, 1e-8).unwrap();
        let lm = build_l_pm(&grid, &fam, LocalizationSign::Minus, 1e-8).unwrap();
        let h = choose_h(&grid, 1.0, 4.0).unwrap();
        let spec = build_t(&grid, &lp, &lm, 4.0, 0.95, &h).unwrap();
        // the eigenbasis spans L⁺ ∪ L⁻, so it serves directly as the mode set
        let fock =
            build_fock(mode_set(&spec.eigenvectors, 1e-10).unwrap(), n_max, 20_000).unwrap();
        Setup { grid, lp, lm, spec, fock }
    }

    fn pair_with(d: usize, slot: &str, j: usize, k: u8) -> MultiIndexPair {
        let mut p = MultiIndexPair::zeros(d);
        match slot {
            "mu+" => p.mu_plus[j] = k,
            "mu-" => p.mu_minus[j] = k,
            "nu+" => p.nu_plus[j] = k,
            _ => p.nu_minus[j] = k,
        }
        p
    }

    #[test]
    fn multi_index_accessors() {
        let mut p = MultiIndexPair::zeros(3);
        p.mu_plus[0] = 2;
        p.mu_minus[1] = 1;
        p.nu_plus[2] = 3;
        assert_eq!(p.mu_total(), 3);
        assert_eq!(p.nu_total(), 3);
        assert_eq!(p.order(), 6);
        assert_relative_eq!(p.factorial(), 2.0 * 1.0 * 6.0);
        // i^{2 + 3 + 2} = i^7 = -i
        assert_relative_eq!((p.phase() - Complex64::new(0.0, -1.0)).norm(), 0.0);
    }

    #[test]
    fn s_zero_pair_gives_zero_functional() {
        let st = setup(4);
        let d = st.spec.eigenvectors.len();
        let pair = MultiIndexPair::zeros(d);
        let op =
            s_operator(&st.fock, &st.lp, &st.lm, &st.spec.eigenvectors, &pair, None).unwrap();
        assert!(op.is_identity());
        let pe = energy_projection(&st.fock, &st.grid, 4.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        assert_eq!(s_single_norm(&st.fock, &pe, &op, &mut rng).unwrap(), 0.0);
        // and on an explicit vacuum-subtracted functional
        let mut psi = st.fock.vacuum();
        psi[1] = Complex64::new(0.6, 0.0); // some excited component
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in psi.iter_mut() {
            *z /= norm;
        }
        let phi = FiniteRankFunctional::rank_one(psi.clone(), psi);
        let val = phi.eval(&st.fock, |v| op.apply(&st.fock, v));
        assert!(val.norm() < 1e-12);
    }

    #[test]
    fn s_estimate_holds_for_number_like_monomial() {
        let st = setup(6);
        let pe = energy_projection(&st.fock, &st.grid, 4.0).unwrap();
        let d = st.spec.eigenvectors.len();
        let mut pair = MultiIndexPair::zeros(d);
        pair.mu_plus[0] = 1;
        pair.nu_plus[0] = 1;
        let op =
            s_operator(&st.fock, &st.lp, &st.lm, &st.spec.eigenvectors, &pair, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let norm = s_single_norm(&st.fock, &pe, &op, &mut rng).unwrap();
        let bound = s_estimate_rhs(4.0, &st.spec.eigenvalues, &pair);
        assert!(
            bound - norm >= -1e-8,
            "estimate violated: norm {norm} vs bound {bound}"
        );
        assert!(norm > 0.0);
    }

    #[test]
    fn s_norm_is_nearly_translation_invariant() {
        let st = setup(5);
        let d = st.spec.eigenvectors.len();
        let mut pair = MultiIndexPair::zeros(d);
        pair.nu_plus[0] = 1;
        let x = SpacetimePoint::spatial(vec![0.6, 0.0, 0.0]);

        // mode set closed under the translation so both operators act faithfully
        let mut gens: Vec<SingleParticleVector> = st.spec.eigenvectors.clone();
        for e in &st.spec.eigenvectors {
            gens.push(translate(&st.lp.project(e), &x).unwrap());
            gens.push(translate(&st.lm.project(e), &x).unwrap());
        }
        let fock = build_fock(mode_set(&gens, 1e-9).unwrap(), 3, 20_000).unwrap();
        let pe2 = energy_projection(&fock, &st.grid, 4.0).unwrap();

        let op0 = s_operator(&fock, &st.lp, &st.lm, &st.spec.eigenvectors, &pair, None).unwrap();
        let opx =
            s_operator(&fock, &st.lp, &st.lm, &st.spec.eigenvectors, &pair, Some(&x)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let n0 = s_single_norm(&fock, &pe2, &op0, &mut rng).unwrap();
        let nx = s_single_norm(&fock, &pe2, &opx, &mut rng).unwrap();
        let drift = (n0 - nx).abs() / n0.max(1e-300);
        assert!(drift <= 0.05, "translation drift {drift} (norms {n0} vs {nx})");
    }

    #[test]
    fn tau_trivial_values() {
        let d = 3;
        let pair = MultiIndexPair::zeros(d);
        let c = vec![0.2, -0.1, 0.05];
        let v = tau_on_weyl(&pair, &c, &c, 0.25);
        assert_relative_eq!(v.re, (-0.125f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(v.im, 0.0);
        // f = 0 with a nonzero index vanishes
        let p1 = pair_with(d, "nu+", 1, 1);
        let zero = vec![0.0; d];
        assert_eq!(tau_on_weyl(&p1, &zero, &zero, 0.0).norm(), 0.0);
        // sampled estimate: |τ| below the majorant
        for (slot, j, k) in [("mu+", 0, 2), ("mu-", 1, 1), ("nu-", 2, 3)] {
            let p = pair_with(d, slot, j, k);
            let v = tau_on_weyl(&p, &c, &c, 0.25).norm();
            assert!(v <= tau_estimate_rhs(&p) + 1e-15);
        }
    }

    #[test]
    fn nested_commutator_identity_on_truncated_fock() {
        // (Ω|[a(e₁),[a*(e₂),W(f)]]Ω) = e^{-‖f‖²/2} ⟨e₁|if⟩⟨if|e₂⟩
        let st = setup(8);
        let m = st.fock.modes.len();
        let mut coeffs = vec![Complex64::ZERO; m];
        coeffs[0] = Complex64::new(0.31, 0.12);
        if m > 1 {
            coeffs[1] = Complex64::new(-0.2, 0.23);
        }
        let fnorm2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let w = weyl_matrix(&st.fock, &coeffs).unwrap();
        let a1 = st.fock.annihilator_dense(0);
        let a2c = st.fock.annihilator_dense(1.min(m - 1)).adjoint();
        let inner = &a2c * &w - &w * &a2c;
        let outer = &a1 * &inner - &inner * &a1;
        let vac_idx = st.fock.vacuum_index();
        let got = outer[(vac_idx, vac_idx)];
        // ⟨e₁|if⟩ = i f₁ and ⟨if|e₂⟩ = conj(i f₂) in mode coordinates
        let e1_if = Complex64::i() * coeffs[0];
        let if_e2 = (Complex64::i() * coeffs[1.min(m - 1)]).conj();
        let expect = Complex64::new((-0.5 * fnorm2).exp(), 0.0) * e1_if * if_e2;
        assert!(
            (got - expect).norm() < 1e-6,
            "commutator identity: got {got}, expected {expect}"
        );
    }

    #[test]
    fn expansion_vanishes_for_subtracted_vacuum() {
        let st = setup(6);
        let vac = st.fock.vacuum();
        let phi = FiniteRankFunctional::rank_one(vac.clone(), vac);
        // f ∈ L: real combination of the L⁺ basis plus i × the L⁻ basis
        let mut f = st.lp.basis[0].scaled(Complex64::new(0.2, 0.0));
        f = f.add_scaled(Complex64::new(0.0, 0.1), &st.lm.basis[0]);
        let check = expansion_check(
            &st.fock,
            &phi,
            &f,
            &st.lp,
            &st.lm,
            &st.spec.eigenvectors,
            4,
            1e-8,
        )
        .unwrap();
        assert!(check.direct.norm() < 1e-10);
        for p in &check.partial_sums {
            assert!(p.norm() < 1e-10);
        }
    }

    #[test]
    fn expansion_reproduces_one_photon_functionals() {
        let st = setup(8);

        // f ∈ L with ‖f‖ = 1/2: f⁺ ∈ L⁺ and f⁻ ∈ L⁻, both J-invariant
        let mut f = st.lp.basis[0].scaled(Complex64::new(0.35, 0.0));
        f = f.add_scaled(Complex64::new(0.0, 0.357071421427), &st.lm.basis[0]);
        let fnorm = f.norm();
        assert_relative_eq!(fnorm, 0.5, max_relative = 1e-2);

        // one-photon state mixed with the vacuum to populate every low order
        let mut psi = st.fock.vacuum();
        let mut occ = vec![0u8; st.fock.modes.len()];
        occ[0] = 1;
        let one = st.fock.state_index(&occ).unwrap();
        psi[one] = Complex64::new(0.8, 0.1);
        let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in psi.iter_mut() {
            *z /= nrm;
        }
        let mut occ2 = vec![0u8; st.fock.modes.len()];
        occ2[1.min(st.fock.modes.len() - 1)] = 1;
        let mut psi2 = st.fock.vacuum();
        psi2[st.fock.state_index(&occ2).unwrap()] = Complex64::new(0.5, -0.4);
        psi2[one] = Complex64::new(0.3, 0.0);
        let nrm2 = psi2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in psi2.iter_mut() {
            *z /= nrm2;
        }
        let phi = FiniteRankFunctional { terms: vec![(Complex64::ONE, psi, psi2)] };

        let check = expansion_check(
            &st.fock,
            &phi,
            &f,
            &st.lp,
            &st.lm,
            &st.spec.eigenvectors,
            6,
            1e-8,
        )
        .unwrap();
        let last = *check.residuals.last().unwrap();
        assert!(last < 1e-4, "residual at K=6: {last}");
        // residuals settle monotonically beyond order 2
        for k in 2..check.residuals.len() - 1 {
            assert!(
                check.residuals[k + 1] <= check.residuals[k] + 1e-8,
                "residuals not settling at k={k}: {:?}",
                check.residuals
            );
        }
        assert!(check.terms_evaluated > 0);
    }
}
