//! Multi-point nuclearity machinery: the separation measure δ(x) of a
//! translation configuration, brute-force lower bounds on the multi-point
//! norms ‖S_{μ̄ν̄}‖_{x₁…x_N} over rank-one vacuum-subtracted functionals, the
//! proposition-side upper bound they are tested against, and the final
//! N-point nuclear-norm estimate evaluated in the log domain (its series
//! factor overflows any float format long before it converges).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{EnergyProjection, TruncatedFock};
use crate::functionals::{s_estimate_rhs, MultiIndexPair, SOperator};
use crate::grid::{MomentumGrid, SpacetimePoint};
use crate::linalg::{top_eigpair_hermitian, LogSumExp};

/// A named family of translation points x₁…x_N.
#[derive(Debug, Clone)]
pub struct TranslationConfig {
    pub name: String,
    pub points: Vec<SpacetimePoint>,
}

/// δ(x) = inf_{i≠j} (|x⃗_i − x⃗_j| − |x⁰_i − x⁰_j|); +∞ for fewer than two
/// points (no pair to separate).
pub fn delta_x(points: &[SpacetimePoint]) -> f64 {
    let n = points.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut inf = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i].sub(&points[j]);
            inf = inf.min(d.spatial_norm() - d.t.abs());
        }
    }
    inf
}

impl TranslationConfig {
    pub fn new(name: impl Into<String>, points: Vec<SpacetimePoint>) -> Self {
        TranslationConfig { name: name.into(), points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delta(&self) -> f64 {
        delta_x(&self.points)
    }

    /// Largest pairwise spatial separation.
    pub fn max_separation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                worst = worst.max(self.points[i].sub(&self.points[j]).spatial_norm());
            }
        }
        worst
    }

    /// Separation-measure and wrap-limit validation for proposition checks.
    pub fn validate_for_grid(&self, grid: &MomentumGrid) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Param(format!("configuration '{}' has no points", self.name)));
        }
        let delta = self.delta();
        if delta < 0.0 {
            return Err(Error::Param(format!(
                "configuration '{}' has δ(x) = {delta} < 0 (a timelike pair)",
                self.name
            )));
        }
        let sep = self.max_separation();
        if sep >= grid.wrap_limit() {
            return Err(Error::Param(format!(
                "configuration '{}' has spatial separation {sep} beyond the wrap limit {}",
                self.name,
                grid.wrap_limit()
            )));
        }
        Ok(())
    }
}

/// Outcome of the rank-one brute-force search.
#[derive(Debug, Clone)]
pub struct MultiNormEstimate {
    /// Best value found (a lower bound on the multi-point norm).
    pub value: f64,
    pub restart_values: Vec<f64>,
    /// (max − min) / max over restarts.
    pub spread: f64,
    pub iterations: usize,
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Trace norm of |ψ⟩⟨ψ'| − c |Ω⟩⟨Ω| for unit ψ, ψ' and c = ⟨ψ'|ψ⟩
/// (both in the kept-state coordinates; `vac` is the vacuum coordinate vector).
fn rank_two_trace_norm(psi: &[Complex64], psi_p: &[Complex64], vac: &[Complex64]) -> f64 {
    let c = dotc(psi_p, psi);
    // left basis spans {ψ, Ω}, right basis spans {ψ', Ω}
    let left = orthopair(psi, vac);
    let right = orthopair(psi_p, vac);
    let mut m = [[Complex64::ZERO; 2]; 2];
    for (i, u) in left.iter().enumerate() {
        for (j, v) in right.iter().enumerate() {
            // ⟨u|R|v⟩ = ⟨u|ψ⟩⟨ψ'|v⟩ − c⟨u|Ω⟩⟨Ω|v⟩
            m[i][j] = dotc(u, psi) * dotc(psi_p, v) - c * dotc(u, vac) * dotc(vac, v);
        }
    }
    // singular values of the 2×2 block
    let a2 = m[0][0].norm_sqr() + m[0][1].norm_sqr() + m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (a2 * a2 - 4.0 * det.norm_sqr()).max(0.0).sqrt();
    let s1 = ((a2 + disc) / 2.0).max(0.0).sqrt();
    let s2 = ((a2 - disc) / 2.0).max(0.0).sqrt();
    s1 + s2
}

fn orthopair(a: &[Complex64], b: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut out = vec![a.to_vec()];
    let overlap = dotc(a, b);
    let mut rest: Vec<Complex64> = b.iter().zip(a).map(|(x, y)| x - overlap * y).collect();
    let norm = rest.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 1e-14 {
        for z in rest.iter_mut() {
            *z /= norm;
        }
        out.push(rest);
    } else {
        out.push(vec![Complex64::ZERO; a.len()]);
    }
    out
}

/// Lower-bound estimate of ‖S_{μ̄ν̄}‖_{x₁…x_N} = sup over the unit ball of
/// vacuum-subtracted functionals of (Σ_k |S(α*_{x_k}φ)|²)^{1/2}, restricted to
/// rank-one φ = |ψ⟩⟨ψ'| − ⟨ψ'|ψ⟩ ω₀ with ψ, ψ' in the range of P_E, scaled to
/// unit trace norm. Alternating ascent on the two vectors with random
/// restarts; extreme points of the trace-norm ball are rank-one, so the
/// restriction loses nothing except the vacuum-mixing direction.
pub fn multi_norm_bruteforce(
    fock: &TruncatedFock,
    pe: &EnergyProjection,
    ops: &[SOperator],
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<MultiNormEstimate> {
    if ops.is_empty() {
        return Err(Error::Param("no translated operators supplied".into()));
    }
    let kept = pe.rank();
    if kept == 0 {
        return Err(Error::Param("energy projection keeps no states".into()));
    }
    let states = pe.states();

    // compress each A_k to the kept-state coordinates once; the ascent then
    // runs entirely in the small space
    let vac_full = fock.vacuum();
    let vac: Vec<Complex64> = states.iter().map(|st| dotc(st, &vac_full)).collect();
    let mut compressed = Vec::with_capacity(ops.len());
    let mut omega0 = Vec::with_capacity(ops.len());
    for op in ops {
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(kept, kept);
        for (j, st) in states.iter().enumerate() {
            let col = op.apply(fock, st);
            for (i, sti) in states.iter().enumerate() {
                m[(i, j)] = dotc(sti, &col);
            }
        }
        compressed.push(m);
        omega0.push(dotc(&vac_full, &op.apply(fock, &vac_full)));
    }

    let normalize = |v: &mut Vec<Complex64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            for z in v.iter_mut() {
                *z /= n;
            }
        }
    };
    let matvec = |m: &nalgebra::DMatrix<Complex64>, x: &[Complex64]| -> Vec<Complex64> {
        (m * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    };
    let matvec_adj = |m: &nalgebra::DMatrix<Complex64>, x: &[Complex64]| -> Vec<Complex64> {
        (m.adjoint() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    };

    let objective = |alpha: &[Complex64], beta: &[Complex64]| -> f64 {
        let mut num = 0.0;
        for (m, &a0) in compressed.iter().zip(&omega0) {
            let g = dotc(beta, &matvec(m, alpha)) - dotc(beta, alpha) * a0;
            num += g.norm_sqr();
        }
        let denom = rank_two_trace_norm(alpha, beta, &vac);
        if denom > 0.0 {
            num.sqrt() / denom
        } else {
            0.0
        }
    };

    // one alternating pass: ψ-step then ψ'-step, returning the new objective
    let ascend = |alpha: &mut Vec<Complex64>, beta: &mut Vec<Complex64>| -> f64 {
        // ψ-step: maximize Σ_k |⟨u_k, α⟩|², u_k = Ã_k†β − conj(ω₀(A_k)) β
        let mut gram_u = nalgebra::DMatrix::<Complex64>::zeros(kept, kept);
        for (m, &a0) in compressed.iter().zip(&omega0) {
            let mut u = matvec_adj(m, beta);
            for (ui, bi) in u.iter_mut().zip(beta.iter()) {
                *ui -= a0.conj() * bi;
            }
            for i in 0..kept {
                for j in 0..kept {
                    gram_u[(i, j)] += u[i] * u[j].conj();
                }
            }
        }
        let (lam_a, top_a) = top_eigpair_hermitian(&gram_u);
        if lam_a > 0.0 {
            *alpha = top_a.as_slice().to_vec();
            normalize(alpha);
        }

        // ψ'-step with z_k = Ã_k α − ω₀(A_k) α
        let mut gram_z = nalgebra::DMatrix::<Complex64>::zeros(kept, kept);
        for (m, &a0) in compressed.iter().zip(&omega0) {
            let mut z = matvec(m, alpha);
            for (zi, ai) in z.iter_mut().zip(alpha.iter()) {
                *zi -= a0 * ai;
            }
            for i in 0..kept {
                for j in 0..kept {
                    gram_z[(i, j)] += z[i] * z[j].conj();
                }
            }
        }
        let (lam_b, top_b) = top_eigpair_hermitian(&gram_z);
        if lam_b > 0.0 {
            *beta = top_b.as_slice().to_vec();
            normalize(beta);
        }
        objective(alpha, beta)
    };

    // principled start: top eigenvector of the stacked numerator Gram Σ Ã†Ã
    let mut stacked = nalgebra::DMatrix::<Complex64>::zeros(kept, kept);
    for m in &compressed {
        stacked += m.adjoint() * m;
    }
    let (_, alpha0) = top_eigpair_hermitian(&stacked);
    let alpha0: Vec<Complex64> = alpha0.as_slice().to_vec();

    // deterministic candidate floor shared by every restart: singular pairs of
    // each compressed operator and of the stacked start, each evaluated with
    // overlap- and vacuum-orthogonalized variants (the trace-norm denominator
    // rewards killing ⟨ψ'|ψ⟩ and vacuum components)
    let orth = |v: &[Complex64], against: &[Complex64]| -> Option<Vec<Complex64>> {
        let c = dotc(against, v);
        let mut out: Vec<Complex64> = v.iter().zip(against).map(|(x, a)| x - c * a).collect();
        let n = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-9 {
            for z in out.iter_mut() {
                *z /= n;
            }
            Some(out)
        } else {
            None
        }
    };
    let eval_variants = |alpha: &[Complex64], beta: &[Complex64]| -> f64 {
        let mut alphas: Vec<Vec<Complex64>> = vec![alpha.to_vec()];
        if let Some(a) = orth(alpha, &vac) {
            alphas.push(a);
        }
        let mut best: f64 = 0.0;
        for a in &alphas {
            let mut betas: Vec<Vec<Complex64>> = vec![beta.to_vec()];
            if let Some(b) = orth(beta, a) {
                if let Some(bv) = orth(&b, &vac) {
                    betas.push(bv);
                }
                betas.push(b);
            }
            if let Some(b) = orth(beta, &vac) {
                betas.push(b);
            }
            for b in &betas {
                best = best.max(objective(a, b));
            }
        }
        best
    };
    let mut candidate_floor: f64 = 0.0;
    for m in &compressed {
        let svd = m.clone().svd(true, true);
        if let (Some(u), Some(vt)) = (&svd.u, &svd.v_t) {
            let beta_c: Vec<Complex64> = (0..kept).map(|i| u[(i, 0)]).collect();
            let alpha_c: Vec<Complex64> = (0..kept).map(|i| vt[(0, i)].conj()).collect();
            candidate_floor = candidate_floor.max(eval_variants(&alpha_c, &beta_c));
        }
    }
    {
        let mut gram_b = nalgebra::DMatrix::<Complex64>::zeros(kept, kept);
        for m in &compressed {
            let z = matvec(m, &alpha0);
            for i in 0..kept {
                for j in 0..kept {
                    gram_b[(i, j)] += z[i] * z[j].conj();
                }
            }
        }
        let (_, beta0) = top_eigpair_hermitian(&gram_b);
        candidate_floor = candidate_floor.max(eval_variants(&alpha0, beta0.as_slice()));
    }

    let max_iters = 60;
    let mut restart_values = Vec::with_capacity(restarts);
    let mut total_iters = 0usize;
    let denom = restarts.saturating_sub(1).max(1) as f64;
    for restart in 0..restarts.max(1) {
        // blend between the deterministic start and a fully random one
        let w = restart as f64 / denom;
        let mut alpha: Vec<Complex64> = alpha0
            .iter()
            .map(|a| {
                let noise =
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                a * Complex64::new(1.0 - w, 0.0) + noise * Complex64::new(w, 0.0)
            })
            .collect();
        normalize(&mut alpha);
        let mut beta: Vec<Complex64> = (0..kept)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        normalize(&mut beta);

        let mut best = candidate_floor.max(objective(&alpha, &beta));
        for kick in 0..3 {
            if kick > 0 {
                // escape weak stationary points with a random kick
                for z in alpha.iter_mut() {
                    *z += Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        * 0.4;
                }
                for z in beta.iter_mut() {
                    *z += Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        * 0.4;
                }
                normalize(&mut alpha);
                normalize(&mut beta);
            }
            let mut prev = -1.0f64;
            for it in 0..max_iters {
                total_iters = total_iters.max(it + 1);
                let f = ascend(&mut alpha, &mut beta);
                best = best.max(f);
                if (f - prev).abs() <= 1e-11 * f.abs().max(1e-300) {
                    break;
                }
                prev = f;
            }
        }
        restart_values.push(best);
    }

    let value = restart_values.iter().cloned().fold(0.0f64, f64::max);
    let min = restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if value > 0.0 { (value - min) / value } else { 0.0 };
    Ok(MultiNormEstimate { value, restart_values, spread, iterations: total_iters })
}

/// The proposition-side bound on ‖S_{μ̄ν̄}‖²_{x₁…x_N}:
///
///   16 Ĉ sup_{|p⃗|≤E} |h̃|^{-2} E^{|μ̄|+|ν̄|} t^{2(μ̄+ν̄)} {1 + (N−1)/(δ+1)^{s-2-ε}}
///
/// with Ĉ the calibrated decay constant from the correlation module.
#[allow(clippy::too_many_arguments)]
pub fn semibound_rhs(
    pair: &MultiIndexPair,
    n_points: usize,
    delta: f64,
    e_max: f64,
    eigenvalues: &[f64],
    sup_h_inv_sq: f64,
    eps: f64,
    chat: f64,
    s: usize,
) -> Result<f64> {
    if pair.nu_total() == 0 {
        return Err(Error::Param(
            "the proposition bound needs ν̄ ≠ 0 (S_{μ̄,0} pairs are reduced before use)".into(),
        ));
    }
    if delta < 0.0 {
        return Err(Error::Param(format!("δ(x) = {delta} < 0")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Param(format!("ε = {eps} outside (0, 1)")));
    }
    let braces = braces_factor(n_points, delta, s, eps);
    let est = s_estimate_rhs(e_max, eigenvalues, pair);
    Ok(16.0 * chat * sup_h_inv_sq * est * est * braces)
}

/// {1 + (N−1)/(δ+1)^{s-2-ε}}.
pub fn braces_factor(n_points: usize, delta: f64, s: usize, eps: f64) -> f64 {
    if n_points <= 1 {
        return 1.0;
    }
    1.0 + (n_points as f64 - 1.0) / (delta + 1.0).powf(s as f64 - 2.0 - eps)
}

/// The N-point nuclear-norm bound, kept in the log domain:
///
///   ln 4 + ½ ln Ĉ + ln sup|h̃|^{-1} + (4/p) ln Σ_k (2⁵E)^{pk/2} ‖T^p‖₁^k /(k!)^{p/2}
///   + ½ ln{1 + (N−1)/(δ+1)^{s-2-ε}}.
///
/// The series is summed past its largest term until the term ratio certifies a
/// geometric tail; the reported split separates the partial sum up to
/// `k_report` from the remainder.
#[derive(Debug, Clone)]
pub struct PiNormBound {
    pub ln_value: f64,
    /// exp(ln_value); +∞ when not representable.
    pub value: f64,
    pub series_ln: f64,
    /// Partial series over k ≤ k_report.
    pub partial_ln: f64,
    /// Certified remainder beyond k_report.
    pub tail_ln: f64,
    pub braces: f64,
    /// Index of the largest series term.
    pub k_peak: usize,
    /// Index at which summation stopped with a geometric certificate.
    pub k_stop: usize,
}

/// Split log-domain summation of Σ_k exp(k·g − (p/2) ln k!).
pub struct FactorialSeries {
    pub full_ln: f64,
    pub partial_ln: f64,
    pub tail_ln: f64,
    pub k_peak: usize,
    pub k_stop: usize,
}

/// Sums the entire-function-type series Σ_k c^k/(k!)^{p/2} (c = e^g) in the log
/// domain: directly while the peak index is small, otherwise over a window
/// around the peak with rigorous edge bounds (the left block is dominated by
/// its largest term, the right tail by a geometric certificate with the
/// decreasing term ratio). `partial` collects orders ≤ k_report, `tail` the
/// certified remainder.
pub fn factorial_series(g: f64, p: f64, k_report: usize) -> Result<FactorialSeries> {
    let ln_term = |k: usize| k as f64 * g - 0.5 * p * crate::linalg::ln_factorial(k);
    // terms grow while k + 1 ≤ e^{2g/p}
    let k_star_f = (2.0 * g / p).exp();
    if !k_star_f.is_finite() || k_star_f > 1e12 {
        return Err(Error::SeriesTail { k: 1_000_000_000_000, ratio: k_star_f });
    }

    let mut partial = LogSumExp::new();
    for k in 0..=k_report {
        partial.push(ln_term(k));
    }

    let drop = 60.0; // e^{-60} · (window count) stays far below f64 resolution
    let mut full = LogSumExp::new();
    let mut tail = LogSumExp::new();

    if k_star_f <= 2e6 {
        // direct pass with an early geometric cut once the terms have fallen
        let mut ln_kfact = 0.0;
        let mut term = 0.0;
        let mut peak = f64::NEG_INFINITY;
        let mut k_peak = 0usize;
        let mut k = 0usize;
        loop {
            full.push(term);
            if k > k_report {
                tail.push(term);
            }
            if term > peak {
                peak = term;
                k_peak = k;
            }
            let ln_ratio = g - 0.5 * p * ((k + 1) as f64).ln();
            if k > k_report && ln_ratio < 0.0 && term < peak - drop {
                let ratio = ln_ratio.exp();
                let bound = term + ln_ratio - (1.0 - ratio).ln();
                full.push(bound);
                tail.push(bound);
                return Ok(FactorialSeries {
                    full_ln: full.value(),
                    partial_ln: partial.value(),
                    tail_ln: tail.value(),
                    k_peak,
                    k_stop: k,
                });
            }
            k += 1;
            ln_kfact += (k as f64).ln();
            term = k as f64 * g - 0.5 * p * ln_kfact;
        }
    }

    // windowed pass around the peak
    let k_star = k_star_f as usize;
    let peak_ln = ln_term(k_star);
    let mut lo = k_star;
    while lo > k_report + 1 && ln_term(lo - 1) > peak_ln - drop {
        lo -= 1;
    }
    let mut hi = k_star;
    while ln_term(hi + 1) > peak_ln - drop || g - 0.5 * p * ((hi + 1) as f64).ln() >= 0.0 {
        hi += 1;
    }

    for k in 0..=k_report {
        full.push(ln_term(k));
    }
    for k in lo..=hi {
        let t = ln_term(k);
        full.push(t);
        tail.push(t);
    }
    // everything between k_report and the window sits in the increasing region
    if lo > k_report + 1 {
        let count = (lo - k_report - 1) as f64;
        let block = ln_term(lo) + count.ln();
        full.push(block);
        tail.push(block);
    }
    // geometric remainder beyond the window
    let ln_ratio = g - 0.5 * p * ((hi + 1) as f64).ln();
    let ratio = ln_ratio.exp();
    let bound = ln_term(hi + 1) - (1.0 - ratio).ln();
    full.push(bound);
    tail.push(bound);

    Ok(FactorialSeries {
        full_ln: full.value(),
        partial_ln: partial.value(),
        tail_ln: tail.value(),
        k_peak: k_star,
        k_stop: hi,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn pi_norm_bound(
    p: f64,
    e_max: f64,
    schatten_t_p: f64,
    chat: f64,
    sup_h_inv: f64,
    n_points: usize,
    delta: f64,
    s: usize,
    eps: f64,
    k_report: usize,
) -> Result<PiNormBound> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Param(format!("nuclear index p = {p} outside (0, 1]")));
    }
    if !(schatten_t_p.is_finite() && schatten_t_p > 0.0) {
        return Err(Error::Param(format!("‖T^p‖₁ = {schatten_t_p} must be positive and finite")));
    }
    if delta < 0.0 && n_points > 1 {
        return Err(Error::Param(format!("δ(x) = {delta} < 0")));
    }
    // ln a_k = k·g − (p/2) ln k!  with g = (p/2) ln(2⁵E) + ln ‖T^p‖₁
    let g = 0.5 * p * (32.0 * e_max).ln() + schatten_t_p.ln();
    let series = factorial_series(g, p, k_report)?;

    let braces = braces_factor(n_points, delta, s, eps);
    let ln_value = (4.0f64).ln()
        + 0.5 * chat.ln()
        + sup_h_inv.ln()
        + (4.0 / p) * series.full_ln
        + 0.5 * braces.ln();
    Ok(PiNormBound {
        ln_value,
        value: ln_value.exp(),
        series_ln: series.full_ln,
        partial_ln: series.partial_ln,
        tail_ln: series.tail_ln,
        braces,
        k_peak: series.k_peak,
        k_stop: series.k_stop,
    })
}

/// Static (single-point) nuclear-norm estimate from computed norm tables:
/// cumulative (Σ_{order ≤ K} ‖τ‖^p ‖S‖^p)^{1/p} per K, plus the analytic
/// majorant of everything beyond the last cutoff (at least one of the four
/// multi-index factors must carry order > K/4).
#[derive(Debug, Clone)]
pub struct PNuclearStatic {
    /// estimates[k] = (Σ_{order ≤ k} ‖τ‖^p ‖S‖^p)^{1/p}.
    pub estimates: Vec<f64>,
    pub per_order: Vec<f64>,
    pub tail_majorant_ln: f64,
}

pub fn p_nuclear_static(
    p: f64,
    entries: &[(usize, f64, f64)],
    k_max: usize,
    e_max: f64,
    schatten_t_p: f64,
) -> Result<PNuclearStatic> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Param(format!("nuclear index p = {p} outside (0, 1]")));
    }
    let mut per_order = vec![0.0f64; k_max + 1];
    for &(order, tau_norm, s_norm) in entries {
        if order <= k_max {
            per_order[order] += tau_norm.powf(p) * s_norm.powf(p);
        }
    }
    let mut estimates = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    for &v in &per_order {
        acc += v;
        estimates.push(acc.powf(1.0 / p));
    }

    // majorant of the complement: 4 · (per-factor tail beyond ⌊K/4⌋) · (full)³
    let g = 0.5 * p * (32.0 * e_max).ln() + schatten_t_p.ln();
    let series = factorial_series(g, p, k_max / 4)?;
    let tail_majorant_ln = (4.0f64).ln() + series.tail_ln + 3.0 * series.full_ln;
    Ok(PNuclearStatic { estimates, per_order, tail_majorant_ln })
}
