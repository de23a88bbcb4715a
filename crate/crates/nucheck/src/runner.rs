//! Scenario-driven command pipelines: each command builds the objects it
//! needs, evaluates its checks at the pinned tolerances, and returns a
//! [`Report`]. `cmd_full` writes one run directory with all reports, the scan
//! CSVs, a scenario echo and a summary index; identical scenario + seed give
//! byte-identical output.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::correlations::{
    calibrate_decay_ratio, correlator, kernel_norm_bound, kernel_split, spacelike_margins,
    spatial_decay_fit, standard_directions, support_vanishing_check, uniform_bound_constant,
    Correlator, KernelBound,
};
use crate::error::{Error, Result};
use crate::fock::{
    build_fock, energy_bound_check, energy_projection, harmonic_bound_check, mode_set,
    weyl_matrix,
};
use crate::functionals::{
    expansion_check, s_estimate_rhs, s_operator, s_single_norm, tau_estimate_rhs, tau_on_weyl,
    FiniteRankFunctional, MultiIndexPair,
};
use crate::grid::{
    build_grid, conjugate_j, translate, MomentumGrid, SingleParticleVector, SpacetimePoint,
};
use crate::linalg::ln_factorial_table;
use crate::localization::{
    build_l_pm, build_l_real, build_t, chil_identity_check, choose_h, kosaki_margin,
    LocalizationSign, LocalizationSpectrum, RealSubspace, SmoothCutoff, Subspace,
    TestFunctionFamily,
};
use crate::nuclearity::{
    braces_factor, multi_norm_bruteforce, p_nuclear_static, pi_norm_bound, semibound_rhs,
};
use crate::report::{Check, Report, ScanRow};
use crate::scenario::{task_seed, Scenario};

/// Everything downstream commands share for one grid resolution.
pub struct Artifacts {
    pub grid: Arc<MomentumGrid>,
    pub family: TestFunctionFamily,
    pub lp: Subspace,
    pub lm: Subspace,
    pub lreal: RealSubspace,
    pub h: crate::localization::HFunction,
    pub spectrum: LocalizationSpectrum,
}

pub fn build_artifacts(scn: &Scenario) -> Result<Artifacts> {
    build_artifacts_for_n(scn, scn.grid.n)
}

pub fn build_artifacts_for_n(scn: &Scenario, n: usize) -> Result<Artifacts> {
    let grid = build_grid(scn.grid_spec_for_n(n))?;
    let family = TestFunctionFamily::standard(&grid, scn.r, scn.family.m)?;
    let lp = build_l_pm(&grid, &family, LocalizationSign::Plus, scn.family.svd_tol)?;
    let lm = build_l_pm(&grid, &family, LocalizationSign::Minus, scn.family.svd_tol)?;
    let lreal = build_l_real(&lp, &lm)?;
    let h = choose_h(&grid, scn.r, scn.e_max)?;
    let spectrum = build_t(&grid, &lp, &lm, scn.e_max, scn.gamma, &h)?;
    Ok(Artifacts { grid, family, lp, lm, lreal, h, spectrum })
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

pub fn cmd_spectrum(scn: &Scenario, seed: u64) -> Result<Report> {
    scn.require_decay_dimension()?;
    let base = build_artifacts(scn)?;
    let mut checks = Vec::new();

    checks.push(Check::new(
        "h_positivity_certificate",
        "smearing_positivity",
        1e-12,
        base.h.min_in_ball,
        0.0,
    ));

    // eigenbasis quality
    let t1 = base.spectrum.eigenvalues[0];
    let mut j_resid: f64 = 0.0;
    let mut eig_resid: f64 = 0.0;
    for (t, e) in base.spectrum.eigenvalues.iter().zip(&base.spectrum.eigenvectors) {
        j_resid = j_resid.max(conjugate_j(e).sub(e).norm());
        let t2e = base.spectrum.apply_t2(&base.lp, &base.lm, e)?;
        eig_resid = eig_resid.max(t2e.sub(&e.scaled(Complex64::new(t * t, 0.0))).norm());
    }
    checks.push(Check::new("eigenvector_j_invariance", "j_invariant_basis", j_resid, 1e-8, 0.0));
    checks.push(Check::new(
        "eigen_residual",
        "spectral_decomposition",
        eig_resid,
        1e-8 * t1.max(1.0) * t1.max(1.0),
        0.0,
    ));

    // independent dense-SVD route to the top eigenvalue
    let stacked = base.spectrum.stacked_component_matrix();
    let svd = stacked.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    checks.push(Check::new(
        "top_eigenvalue_svd_oracle",
        "spectral_decomposition",
        (smax - t1).abs(),
        1e-8 * t1.max(1.0),
        0.0,
    ));

    // Kosaki subadditivity on all component pairs
    for &p in &[0.25, 0.5, 1.0] {
        let scale = base.spectrum.schatten(p)?;
        for a in 0..4 {
            for b in (a + 1)..4 {
                let margin = kosaki_margin(
                    &base.spectrum.component_eigenvalues(a),
                    &base.spectrum.component_eigenvalues(b),
                    &base.spectrum.pair_sum_eigenvalues(a, b),
                    p,
                )?;
                checks.push(Check::new(
                    format!("kosaki_p{p}_{}_{}", a, b),
                    "schatten_subadditivity",
                    -margin,
                    0.0,
                    1e-10 * scale.max(1.0),
                ));
            }
        }
    }

    // refinement sweep: Schatten sums per grid size
    let mut refine_rows = Vec::new();
    for &n in &scn.refine.grid_ns {
        let art = if n == scn.grid.n { None } else { Some(build_artifacts_for_n(scn, n)?) };
        let spec = art.as_ref().map(|a| &a.spectrum).unwrap_or(&base.spectrum);
        let mut row = json!({
            "n": n,
            "dim_plus": art.as_ref().map(|a| a.lp.dim()).unwrap_or(base.lp.dim()),
            "dim_minus": art.as_ref().map(|a| a.lm.dim()).unwrap_or(base.lm.dim()),
        });
        for &p in &scn.p_values {
            row["schatten"][format!("{p}")] = json!(spec.schatten(p)?);
        }
        refine_rows.push(row);
    }
    let base_idx = scn.refine.grid_ns.iter().position(|&n| n == scn.grid.n).unwrap_or(0);
    for &p in &scn.p_values {
        let key = format!("{p}");
        let s0 = refine_rows[base_idx]["schatten"][&key].as_f64().unwrap();
        for (row, &n) in refine_rows.iter().zip(&scn.refine.grid_ns) {
            if n == scn.grid.n {
                continue;
            }
            let sn = row["schatten"][&key].as_f64().unwrap();
            checks.push(Check::new(
                format!("schatten_stability_p{p}_n{n}"),
                "schatten_refinement_stability",
                (sn - s0).abs() / s0,
                0.05,
                0.0,
            ));
        }
    }
    // extracted subspace dimensions stay stable (±1) under refinement
    let mut worst_dim_drift = 0.0f64;
    for row in &refine_rows {
        for key in ["dim_plus", "dim_minus"] {
            let d0 = refine_rows[base_idx][key].as_u64().unwrap() as f64;
            let dn = row[key].as_u64().unwrap() as f64;
            worst_dim_drift = worst_dim_drift.max((dn - d0).abs());
        }
    }
    checks.push(Check::new(
        "subspace_dim_stability",
        "subspace_refinement_stability",
        worst_dim_drift,
        1.0,
        0.0,
    ));

    // localization identity through the smooth cutoff at 2r
    let chi2r = SmoothCutoff::new(&base.grid, 2.0 * scn.r, scn.pad())?;
    for (sub, name) in [(&base.lp, "plus"), (&base.lm, "minus")] {
        let resid = chil_identity_check(&base.grid, sub, Some(&chi2r))?;
        checks.push(Check::new(
            format!("cutoff_identity_{name}"),
            "cutoff_localization_identity",
            resid,
            1e-8,
            0.0,
        ));
    }

    let data = json!({
        "eigenvalues": base.spectrum.eigenvalues,
        "schatten": scn.p_values.iter().map(|&p| json!({
            "p": p,
            "value": base.spectrum.schatten(p).unwrap(),
        })).collect::<Vec<_>>(),
        "component_labels": base.spectrum.component_labels,
        "refinement": refine_rows,
        "h_min_in_ball": base.h.min_in_ball,
        "real_subspace_dim": base.lreal.dim(),
        "wrap_limit": base.grid.wrap_limit(),
    });
    Ok(Report::new("spectrum", scn, seed, checks, data))
}

// ---------------------------------------------------------------------------
// corr-scan
// ---------------------------------------------------------------------------

pub struct CorrScanOutput {
    pub report: Report,
    pub rows: Vec<ScanRow>,
}

fn decay_bound(
    chat: f64,
    tsq: f64,
    ub: f64,
    s: f64,
    eps: f64,
    x: &SpacetimePoint,
) -> f64 {
    let lag = (x.spatial_norm() - x.t.abs() + 1.0).max(1.0);
    (chat * tsq * lag.powf(-(s - 2.0 - eps))).min(ub * tsq)
}

pub fn cmd_corr_scan(
    scn: &Scenario,
    eig: Option<usize>,
    sign: Option<LocalizationSign>,
    config_name: Option<&str>,
    seed: u64,
) -> Result<CorrScanOutput> {
    scn.require_decay_dimension()?;
    let art = build_artifacts(scn)?;
    let grid = &art.grid;
    let s = scn.s as f64;
    let eps = scn.epsilon;
    let dirs = standard_directions(scn.s);
    let wrap = grid.wrap_limit();
    let mut checks = Vec::new();

    let eig_count = scn.corr.eig_count.min(art.spectrum.dim());
    let scan_eig = eig.unwrap_or(0);
    if scan_eig >= art.spectrum.dim() {
        return Err(Error::Param(format!(
            "eigenvector index {scan_eig} out of range (spectrum has {})",
            art.spectrum.dim()
        )));
    }

    // (−) support vanishing for the leading eigenvectors
    let mut support_rows = Vec::new();
    let mut worst_support: f64 = 0.0;
    for j in 0..eig_count {
        let corr = correlator(&art.h, &art.lm, &art.spectrum.eigenvectors[j])?;
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &format!("support-{j}")));
        let scan = support_vanishing_check(&corr, scn.r, scn.corr.support_samples, &mut rng)?;
        worst_support = worst_support.max(scan.max_rel_on_grid);
        support_rows.push(json!({
            "eigenvector": j,
            "max_rel_on_grid": scan.max_rel_on_grid,
            "max_rel_off_grid": scan.max_rel_off_grid,
            "samples": scan.grid_samples,
        }));
    }
    checks.push(Check::new(
        "support_vanishing_minus",
        "support_vanishing",
        worst_support,
        1e-6,
        0.0,
    ));

    // decay fits on the (+) channel of the leading eigenvector
    let corr_plus = correlator(&art.h, &art.lp, &art.spectrum.eigenvectors[0])?;
    let fit_hi = scn.corr.fit_hi.min(0.98 * wrap);
    let spatial =
        spatial_decay_fit(&corr_plus, (scn.corr.fit_lo, fit_hi), scn.corr.n_radii, 0.0, &dirs)?;
    checks.push(Check::new(
        "spatial_decay_exponent",
        "spatial_power_decay",
        spatial.exponent,
        -(s - 2.0) + 0.3,
        0.0,
    ));
    let ray = spatial_decay_fit(
        &corr_plus,
        (scn.corr.fit_lo, fit_hi),
        scn.corr.n_radii,
        scn.corr.ray_fraction,
        &dirs,
    )?;
    checks.push(Check::new(
        "spacelike_ray_exponent",
        "spacelike_power_decay",
        ray.exponent,
        -(s - 2.0 - eps) + 0.3,
        0.0,
    ));

    // uniform bound at every sampled point, for both signs of the top eigenvector
    let ub = uniform_bound_constant(grid, &art.h, scn.gamma);
    let t0 = art.spectrum.eigenvalues[0];
    let mut worst_uniform = f64::NEG_INFINITY;
    for sub in [&art.lp, &art.lm] {
        let corr = correlator(&art.h, sub, &art.spectrum.eigenvectors[0])?;
        for rad in &spatial.radii {
            for d in &dirs {
                let x = SpacetimePoint::spatial(d.iter().map(|c| c * rad).collect());
                worst_uniform = worst_uniform.max(corr.eval(&x).norm());
            }
        }
        worst_uniform = worst_uniform.max(corr.norm_sq);
    }
    checks.push(Check::new(
        "uniform_bound",
        "uniform_correlation_bound",
        worst_uniform,
        ub * t0 * t0,
        1e-10,
    ));

    // spacelike decay with a calibrated constant: train on one sweep,
    // test on interleaved radii and rotated directions
    let tval = art.spectrum.eigenvalues[scan_eig];
    let sub = match sign.unwrap_or(LocalizationSign::Plus) {
        LocalizationSign::Plus => &art.lp,
        LocalizationSign::Minus => &art.lm,
    };
    let corr_scan = correlator(&art.h, sub, &art.spectrum.eigenvectors[scan_eig])?;
    let mut train = vec![SpacetimePoint::zero(scn.s)];
    let mut test = Vec::new();
    let n_train = 14usize;
    for k in 0..n_train {
        let lo = 0.3 * scn.r;
        let hi = 0.97 * wrap;
        let rad = lo * (hi / lo).powf(k as f64 / (n_train - 1) as f64);
        let rad_mid = lo * (hi / lo).powf((k as f64 + 0.5) / (n_train - 1) as f64);
        for &frac in &[0.0, 0.5, 0.9] {
            for (di, d) in dirs.iter().enumerate() {
                let x = SpacetimePoint::new(frac * rad, d.iter().map(|c| c * rad).collect());
                if di % 2 == 0 {
                    train.push(x);
                } else {
                    test.push(x);
                }
                if rad_mid <= hi {
                    test.push(SpacetimePoint::new(
                        frac * rad_mid,
                        d.iter().map(|c| c * rad_mid).collect(),
                    ));
                }
            }
        }
    }
    let chat = calibrate_decay_ratio(&corr_scan, tval, eps, &train)?;
    let margins = spacelike_margins(&corr_scan, chat, tval, eps, &test)?;
    let mut worst_ratio: f64 = 0.0;
    for (_, m, margin) in &margins {
        let bound = m + margin;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(m / bound);
        }
    }
    checks.push(Check::new(
        "spacelike_calibrated_bound",
        "spacelike_power_decay",
        worst_ratio,
        1.05,
        0.0,
    ));

    // t² scaling between the two leading eigenvectors (needs a scenario that
    // actually resolves more than one of them)
    if scn.corr.eig_count >= 2 && art.spectrum.dim() > 1 {
        let c2 = correlator(&art.h, &art.lp, &art.spectrum.eigenvectors[1])?;
        let chat1 = calibrate_decay_ratio(&corr_plus, t0, eps, &train)?;
        let chat2 = calibrate_decay_ratio(&c2, art.spectrum.eigenvalues[1], eps, &train)?;
        let ratio = chat1 / chat2;
        checks.push(Check::new(
            "t_squared_scaling",
            "eigenvalue_scaling",
            (ratio - 1.0).abs(),
            0.2,
            0.0,
        ));
    }

    // positive definiteness of a sampled Gram matrix
    let gram_points: Vec<SpacetimePoint> = (0..6)
        .map(|k| {
            let rad = 0.4 * (k as f64 + 1.0);
            SpacetimePoint::new(
                0.2 * rad * ((k % 3) as f64),
                dirs[k % dirs.len()].iter().map(|c| c * rad).collect(),
            )
        })
        .collect();
    let min_eig =
        crate::correlations::positivity_gram_min_eigenvalue(&corr_scan, &gram_points);
    checks.push(Check::new(
        "correlation_positivity",
        "positive_definiteness",
        -min_eig,
        0.0,
        1e-8 * corr_scan.norm_sq,
    ));

    // CSV rows: radial sweep plus any named configuration points
    let mut rows = Vec::new();
    let tsq = tval * tval;
    let mut emit = |x: &SpacetimePoint, corr: &Correlator| {
        let v = corr.eval(x);
        let bound = decay_bound(chat, tsq, ub, s, eps, x);
        rows.push(ScanRow {
            x: std::iter::once(x.t).chain(x.x.iter().cloned()).collect(),
            re: v.re,
            im: v.im,
            modulus: v.norm(),
            bound,
            margin: bound - v.norm(),
        });
    };
    for rad in &spatial.radii {
        for d in &dirs {
            let x = SpacetimePoint::spatial(d.iter().map(|c| c * rad).collect());
            emit(&x, &corr_scan);
        }
    }
    if let Some(name) = config_name {
        let cfg = scn
            .translation_configs()?
            .into_iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("no configuration named '{name}'")))?;
        for x in &cfg.points {
            emit(x, &corr_scan);
        }
    }

    let data = json!({
        "eigenvector": scan_eig,
        "sign": sign.unwrap_or(LocalizationSign::Plus).label(),
        "support": support_rows,
        "spatial_fit": {
            "exponent": spatial.exponent,
            "residual": spatial.residual,
            "window": [spatial.window.0, spatial.window.1],
            "radii": spatial.radii,
            "moduli": spatial.moduli,
        },
        "ray_fit": {
            "exponent": ray.exponent,
            "residual": ray.residual,
            "time_fraction": scn.corr.ray_fraction,
        },
        "uniform_bound_constant": ub,
        "calibrated_ratio": chat,
        "train_points": train.len(),
        "test_points": test.len(),
    });
    Ok(CorrScanOutput { report: Report::new("corr-scan", scn, seed, checks, data), rows })
}

// ---------------------------------------------------------------------------
// kernel-sweep
// ---------------------------------------------------------------------------

pub struct KernelSweepOutput {
    pub report: Report,
    pub rows: Vec<KernelBound>,
}

pub fn cmd_kernel_sweep(scn: &Scenario, seed: u64) -> Result<KernelSweepOutput> {
    scn.require_decay_dimension()?;
    let grid = build_grid(scn.grid_spec())?;
    let rho = scn.kernel.rho;
    let pad = scn.cutoff.pad_fraction * rho;
    let cutoff = SmoothCutoff::new(&grid, rho, pad)?;
    let lo = 3.0 * (rho + pad);
    let hi = 0.98 * grid.wrap_limit();
    if hi <= lo {
        return Err(Error::Param(format!(
            "kernel sweep has no valid zone: 3(ρ+ε̃) = {lo} exceeds {hi}"
        )));
    }
    let n = scn.kernel.n_radii.max(2);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let rad = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let mut x = vec![0.0; scn.s];
        x[0] = rad;
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &format!("kernel-{k}")));
        rows.push(kernel_norm_bound(&grid, &cutoff, &x, &mut rng)?);
    }

    let mut checks = Vec::new();
    let worst = rows.iter().map(|r| -r.margin).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("kernel_bound_margin", "kernel_norm_bound", worst, 0.0, 0.0));
    let mut worst_ratio: f64 = 0.0;
    for w in rows.windows(2) {
        worst_ratio = worst_ratio.max(w[1].computed / w[0].computed);
    }
    checks.push(Check::new(
        "kernel_norm_monotone",
        "kernel_norm_decay",
        worst_ratio,
        1.05,
        0.0,
    ));

    let split = kernel_split(&grid);
    checks.push(Check::new("kernel_split_sup", "kernel_symbol_split", split.sup_part, 1.0, 1e-12));

    let data = json!({
        "rho": rho,
        "pad": pad,
        "valid_zone": [lo, hi],
        "rows": rows.iter().map(|r| json!({
            "radius": r.x_radius,
            "computed": r.computed,
            "bound": r.bound,
            "margin": r.margin,
        })).collect::<Vec<_>>(),
        "split_l2": split.l2_part,
        "split_sup": split.sup_part,
    });
    Ok(KernelSweepOutput { report: Report::new("kernel-sweep", scn, seed, checks, data), rows })
}

// ---------------------------------------------------------------------------
// fock-verify
// ---------------------------------------------------------------------------

fn weyl_coefficients(modes: usize, norm: f64) -> Vec<Complex64> {
    // deterministic spread over the modes at the requested total norm
    let raw: Vec<Complex64> = (0..modes)
        .map(|j| Complex64::new(0.6 / (j as f64 + 1.0), 0.3 * (-1.0f64).powi(j as i32)))
        .collect();
    let total: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|c| c * Complex64::new(norm / total, 0.0)).collect()
}

pub fn cmd_fock_verify(scn: &Scenario, seed: u64) -> Result<Report> {
    scn.require_decay_dimension()?;
    let art = build_artifacts(scn)?;
    let grid = &art.grid;
    let mut checks = Vec::new();

    // Weyl oracles on the two leading eigenmodes
    let weyl_modes = mode_set(&art.spectrum.eigenvectors[..2.min(art.spectrum.dim())], 1e-10)?;
    let weyl_fock = build_fock(weyl_modes, scn.fock.weyl_n_max, scn.fock.dim_cap)?;
    let coeffs = weyl_coefficients(weyl_fock.modes.len(), 0.5);
    let fnorm2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let w = weyl_matrix(&weyl_fock, &coeffs)?;
    let vac_idx = weyl_fock.vacuum_index();
    let got = w.column(vac_idx)[vac_idx];
    let expect = (-0.5 * fnorm2).exp();
    checks.push(Check::new(
        "weyl_vacuum_expectation",
        "coherent_state_overlap",
        (got - Complex64::new(expect, 0.0)).norm(),
        1e-6,
        0.0,
    ));
    let w_minus = weyl_matrix(&weyl_fock, &coeffs.iter().map(|c| -c).collect::<Vec<_>>())?;
    let prod = &w * &w_minus;
    let mut inv_resid: f64 = 0.0;
    for (col, occ) in weyl_fock.occupations().iter().enumerate() {
        let tot: u8 = occ.iter().sum();
        if (tot as usize) <= weyl_fock.n_max / 2 {
            for row in 0..weyl_fock.dim() {
                let want = if row == col { 1.0 } else { 0.0 };
                inv_resid = inv_resid.max((prod[(row, col)] - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    checks.push(Check::new("weyl_inverse_block", "weyl_unitarity", inv_resid, 1e-6, 0.0));

    // nested-commutator identity
    let a1 = weyl_fock.annihilator_dense(0);
    let second = 1.min(weyl_fock.modes.len() - 1);
    let a2c = weyl_fock.annihilator_dense(second).adjoint();
    let inner = &a2c * &w - &w * &a2c;
    let outer = &a1 * &inner - &inner * &a1;
    let comm_got = outer[(vac_idx, vac_idx)];
    let e1_if = Complex64::i() * coeffs[0];
    let if_e2 = (Complex64::i() * coeffs[second]).conj();
    let comm_expect = Complex64::new(expect, 0.0) * e1_if * if_e2;
    checks.push(Check::new(
        "nested_commutator_identity",
        "weyl_commutator_identity",
        (comm_got - comm_expect).norm(),
        1e-6,
        0.0,
    ));

    // energy bounds: randomized arguments in the span of three leading modes
    let eb_modes = mode_set(&art.spectrum.eigenvectors[..3.min(art.spectrum.dim())], 1e-10)?;
    let eb_fock = build_fock(eb_modes, scn.fock.n_max, scn.fock.dim_cap)?;
    let eb_pe = energy_projection(&eb_fock, grid, scn.e_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, "energy-bounds"));
    let mut min_margin = f64::INFINITY;
    for trial in 0..20 {
        use rand::Rng;
        let n_args = 1 + (trial % 2);
        let fs: Vec<SingleParticleVector> = (0..n_args)
            .map(|_| {
                let mut f = SingleParticleVector::zero(grid.clone());
                for m in eb_fock.modes.modes() {
                    let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    f = f.add_scaled(c, m);
                }
                f
            })
            .collect();
        let check = energy_bound_check(&eb_fock, &eb_pe, grid, &fs, 1e-7, &mut rng)?;
        min_margin = min_margin.min(check.margin);
    }
    checks.push(Check::new("energy_bounds_randomized", "energy_bounds", -min_margin, 0.0, 1e-8));

    // expansion of φ(W(f)) for a one-photon functional at ‖f‖ = 1/2
    let exp_modes = mode_set(&[art.lp.basis[0].clone(), art.lm.basis[0].clone()], 1e-10)?;
    let exp_fock = build_fock(exp_modes, scn.fock.weyl_n_max, scn.fock.dim_cap)?;
    let mut f = art.lp.basis[0].scaled(Complex64::new(0.35, 0.0));
    f = f.add_scaled(Complex64::new(0.0, 0.357_071_421_427), &art.lm.basis[0]);
    let mut psi = exp_fock.vacuum();
    let mut occ = vec![0u8; exp_fock.modes.len()];
    occ[0] = 1;
    psi[exp_fock.state_index(&occ).unwrap()] = Complex64::new(0.8, 0.1);
    let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= nrm);
    let mut psi2 = exp_fock.vacuum();
    let mut occ2 = vec![0u8; exp_fock.modes.len()];
    occ2[exp_fock.modes.len() - 1] = 1;
    psi2[exp_fock.state_index(&occ2).unwrap()] = Complex64::new(0.5, -0.4);
    let nrm2 = psi2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi2.iter_mut().for_each(|z| *z /= nrm2);
    let phi = FiniteRankFunctional { terms: vec![(Complex64::ONE, psi, psi2)] };
    let expansion = expansion_check(
        &exp_fock,
        &phi,
        &f,
        &art.lp,
        &art.lm,
        &art.spectrum.eigenvectors,
        6,
        1e-7,
    )?;
    checks.push(Check::new(
        "expansion_residual_k6",
        "normal_ordered_expansion",
        *expansion.residuals.last().unwrap(),
        1e-4,
        0.0,
    ));
    let mut worst_increase = f64::NEG_INFINITY;
    for k in 2..expansion.residuals.len() - 1 {
        worst_increase = worst_increase.max(expansion.residuals[k + 1] - expansion.residuals[k]);
    }
    checks.push(Check::new(
        "expansion_residual_settling",
        "normal_ordered_expansion",
        worst_increase,
        0.0,
        1e-8,
    ));

    // harmonic bound for N ∈ {1, 2, 4}
    let g0 = art.lp.project(&art.spectrum.eigenvectors[0]);
    let harmonic_configs: Vec<(usize, Vec<SpacetimePoint>)> = vec![
        (1, vec![SpacetimePoint::zero(scn.s)]),
        (
            2,
            vec![
                SpacetimePoint::zero(scn.s),
                SpacetimePoint::spatial(spread_vec(scn.s, 0, 2.5)),
            ],
        ),
        (
            4,
            vec![
                SpacetimePoint::zero(scn.s),
                SpacetimePoint::spatial(spread_vec(scn.s, 0, 2.5)),
                SpacetimePoint::spatial(spread_vec(scn.s, 1, 2.5)),
                SpacetimePoint::new(0.5, spread_vec(scn.s, 2, 3.0)),
            ],
        ),
    ];
    let mut harmonic_rows = Vec::new();
    for (n_points, points) in &harmonic_configs {
        let mut gens = Vec::with_capacity(points.len());
        for x in points {
            gens.push(translate(&g0, x)?);
        }
        let hfock = build_fock(mode_set(&gens, 1e-12)?, scn.fock.n_max, scn.fock.dim_cap)?;
        let hpe = energy_projection(&hfock, grid, scn.e_max)?;
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &format!("harmonic-{n_points}")));
        let hc = harmonic_bound_check(&hfock, &hpe, grid, &art.h, &g0, points, 1e-7, &mut rng)?;
        checks.push(
            Check::new(
                format!("harmonic_bound_n{n_points}"),
                "harmonic_bound",
                hc.lhs,
                hc.rhs,
                1e-6,
            )
            .with_slack(hc.slack),
        );
        harmonic_rows.push(json!({
            "n": n_points,
            "lhs": hc.lhs,
            "rhs": hc.rhs,
            "margin": hc.margin,
            "slack": hc.slack,
        }));
    }

    let data = json!({
        "weyl": {
            "f_norm": fnorm2.sqrt(),
            "vacuum_expectation": [got.re, got.im],
            "coherent_value": expect,
            "inverse_block_residual": inv_resid,
        },
        "energy_bounds_min_margin": min_margin,
        "expansion": {
            "direct": [expansion.direct.re, expansion.direct.im],
            "residuals": expansion.residuals,
            "terms": expansion.terms_evaluated,
        },
        "harmonic": harmonic_rows,
    });
    Ok(Report::new("fock-verify", scn, seed, checks, data))
}

fn spread_vec(s: usize, axis: usize, magnitude: f64) -> Vec<f64> {
    let mut v = vec![0.0; s];
    v[axis % s] = magnitude;
    v
}

// ---------------------------------------------------------------------------
// nuclearity
// ---------------------------------------------------------------------------

/// Multi-index pairs over `modes` eigenmodes with |μ̄| + |ν̄| ≤ cutoff, ν̄ ≠ 0.
fn proposition_pairs(modes: usize, cutoff: usize) -> Vec<MultiIndexPair> {
    let slots = 4 * modes;
    let mut flat: Vec<Vec<u8>> = Vec::new();
    let mut cur = vec![0u8; slots];
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
        if slot == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[slot] = k as u8;
            rec(out, cur, slot + 1, left - k);
        }
        cur[slot] = 0;
    }
    for total in 1..=cutoff {
        rec(&mut flat, &mut cur, 0, total);
    }
    flat.sort();
    flat.dedup();
    let mut out = Vec::new();
    for v in flat {
        let pair = MultiIndexPair {
            mu_plus: v[..modes].to_vec(),
            mu_minus: v[modes..2 * modes].to_vec(),
            nu_plus: v[2 * modes..3 * modes].to_vec(),
            nu_minus: v[3 * modes..].to_vec(),
        };
        if pair.nu_total() > 0 {
            out.push(pair);
        }
    }
    out
}

pub fn cmd_nuclearity(scn: &Scenario, seed: u64) -> Result<Report> {
    scn.require_decay_dimension()?;
    let art = build_artifacts(scn)?;
    let grid = &art.grid;
    let eps = scn.epsilon;
    let mut checks = Vec::new();

    // calibrate the decay constant over the leading eigenvectors, both signs
    let dirs = standard_directions(scn.s);
    let wrap = grid.wrap_limit();
    let mut train = vec![SpacetimePoint::zero(scn.s)];
    for k in 0..12 {
        let lo = 0.3 * scn.r;
        let hi = 0.97 * wrap;
        let rad = lo * (hi / lo).powf(k as f64 / 11.0);
        for &frac in &[0.0, 0.5, 0.9] {
            for d in dirs.iter().take(5) {
                train.push(SpacetimePoint::new(frac * rad, d.iter().map(|c| c * rad).collect()));
            }
        }
    }
    let mut chat: f64 = 0.0;
    let eig_used = scn.corr.eig_count.min(art.spectrum.dim());
    for j in 0..eig_used {
        let t = art.spectrum.eigenvalues[j];
        if t <= 0.0 {
            continue;
        }
        for sub in [&art.lp, &art.lm] {
            let corr = correlator(&art.h, sub, &art.spectrum.eigenvectors[j])?;
            chat = chat.max(calibrate_decay_ratio(&corr, t, eps, &train)?);
        }
    }
    let sup_inv_sq = art.h.sup_inv_sq();

    // proposition falsification sweep per configuration
    let pairs = proposition_pairs(scn.multi_norm.top_modes, scn.multi_norm.order_cutoff);
    let configs = scn.translation_configs()?;
    let mut config_rows = Vec::new();
    for cfg in &configs {
        cfg.validate_for_grid(grid)?;
        let delta = cfg.delta();
        let n_points = cfg.len();

        // one translation-closed mode set per configuration
        let mut gens = Vec::new();
        let mut labels = Vec::new();
        for (k, x) in cfg.points.iter().enumerate() {
            for j in 0..scn.multi_norm.top_modes.min(art.spectrum.dim()) {
                let e = &art.spectrum.eigenvectors[j];
                gens.push(translate(&art.lp.project(e), x)?);
                labels.push(format!("U(x{k}) L+ e{j}"));
                gens.push(translate(&art.lm.project(e), x)?);
                labels.push(format!("U(x{k}) L- e{j}"));
            }
        }
        let modes = crate::fock::mode_set_with_provenance(&gens, 1e-9, labels)?;
        let fock = build_fock(modes, scn.fock.n_max, scn.fock.dim_cap)?;
        let pe = energy_projection(&fock, grid, scn.e_max)?;

        let mut worst_ratio: f64 = 0.0;
        let mut worst_spread: f64 = 0.0;
        let mut pair_rows = Vec::new();
        for (pi, pair) in pairs.iter().enumerate() {
            let mut ops = Vec::with_capacity(n_points);
            for x in &cfg.points {
                ops.push(s_operator(
                    &fock,
                    &art.lp,
                    &art.lm,
                    &art.spectrum.eigenvectors[..scn.multi_norm.top_modes.min(art.spectrum.dim())],
                    pair,
                    Some(x),
                )?);
            }
            let mut rng =
                ChaCha8Rng::seed_from_u64(task_seed(seed, &format!("mn-{}-{pi}", cfg.name)));
            let est = multi_norm_bruteforce(&fock, &pe, &ops, scn.multi_norm.restarts, &mut rng)?;
            let rhs = semibound_rhs(
                pair,
                n_points,
                delta,
                scn.e_max,
                &art.spectrum.eigenvalues[..scn.multi_norm.top_modes.min(art.spectrum.dim())],
                sup_inv_sq,
                eps,
                chat,
                scn.s,
            )?;
            let ratio = est.value * est.value / rhs;
            worst_ratio = worst_ratio.max(ratio);
            worst_spread = worst_spread.max(est.spread);
            pair_rows.push(json!({
                "order": pair.order(),
                "bruteforce": est.value,
                "bound_sq": rhs,
                "ratio": ratio,
                "spread": est.spread,
            }));
        }
        checks.push(Check::new(
            format!("proposition_bound_{}", cfg.name),
            "multi_point_norm_bound",
            worst_ratio,
            1.0,
            0.0,
        ));
        checks.push(Check::new(
            format!("restart_spread_{}", cfg.name),
            "optimizer_reliability",
            worst_spread,
            0.05,
            0.0,
        ));
        config_rows.push(json!({
            "name": cfg.name,
            "delta": delta,
            "n": n_points,
            "fock_dim": fock.dim(),
            "pe_rank": pe.rank(),
            "mode_generators": fock.modes.provenance(),
            "pairs": pair_rows,
        }));
    }

    // N-independence of the nuclear-norm bound at large separation
    let mut sweep_rows = Vec::new();
    for &p in &scn.p_values {
        let s_p = art.spectrum.schatten(p)?;
        let reference =
            pi_norm_bound(p, scn.e_max, s_p, chat, art.h.sup_inv(), 1, 0.0, scn.s, eps, scn.k_cutoff)?;
        let mut worst_rel: f64 = 0.0;
        let mut worst_braces_dev: f64 = 0.0;
        let mut n_rows = Vec::new();
        for &n_count in &scn.n_sweep.counts {
            let b = pi_norm_bound(
                p,
                scn.e_max,
                s_p,
                chat,
                art.h.sup_inv(),
                n_count,
                scn.n_sweep.delta,
                scn.s,
                eps,
                scn.k_cutoff,
            )?;
            let rel = (b.ln_value - reference.ln_value).abs() / reference.ln_value.abs();
            worst_rel = worst_rel.max(rel);
            let forced = braces_factor(n_count, scn.n_sweep.delta, scn.s, eps).sqrt();
            let dev = ((b.ln_value - reference.ln_value) - forced.ln()).abs();
            worst_braces_dev = worst_braces_dev.max(dev);
            n_rows.push(json!({
                "n": n_count,
                "ln_value": b.ln_value,
                "braces": b.braces,
                "k_peak": b.k_peak,
                "k_stop": b.k_stop,
            }));
        }
        checks.push(Check::new(
            format!("pi_norm_n_independence_p{p}"),
            "n_independent_limit",
            worst_rel,
            0.02,
            0.0,
        ));
        checks.push(Check::new(
            format!("pi_norm_braces_structure_p{p}"),
            "n_independent_limit",
            worst_braces_dev,
            1e-9 * reference.ln_value.abs(),
            0.0,
        ));

        // monotone profile in δ at fixed N, converging to the N = 1 value
        let fixed_n = 4;
        let mut prev = f64::INFINITY;
        let mut monotone_violation: f64 = 0.0;
        let mut profile = Vec::new();
        for &delta in &scn.n_sweep.deltas {
            let b = pi_norm_bound(
                p,
                scn.e_max,
                s_p,
                chat,
                art.h.sup_inv(),
                fixed_n,
                delta,
                scn.s,
                eps,
                scn.k_cutoff,
            )?;
            if b.ln_value > prev {
                monotone_violation = monotone_violation.max(b.ln_value - prev);
            }
            prev = b.ln_value;
            profile.push(json!({"delta": delta, "ln_value": b.ln_value}));
        }
        checks.push(Check::new(
            format!("pi_norm_delta_monotone_p{p}"),
            "separation_profile",
            monotone_violation,
            0.0,
            1e-12 * reference.ln_value.abs(),
        ));
        let at50 = pi_norm_bound(
            p,
            scn.e_max,
            s_p,
            chat,
            art.h.sup_inv(),
            fixed_n,
            50.0,
            scn.s,
            eps,
            scn.k_cutoff,
        )?;
        checks.push(Check::new(
            format!("pi_norm_delta50_p{p}"),
            "separation_profile",
            (at50.ln_value - reference.ln_value).abs() / reference.ln_value.abs(),
            0.02,
            0.0,
        ));
        sweep_rows.push(json!({
            "p": p,
            "schatten": s_p,
            "reference_ln": reference.ln_value,
            "series_ln": reference.series_ln,
            "k_peak": reference.k_peak,
            "n_rows": n_rows,
            "delta_profile": profile,
        }));
    }

    // static nuclear estimate from computed norm tables
    let top = scn.multi_norm.top_modes.min(art.spectrum.dim());
    let table_pairs = {
        let mut flat = proposition_pairs(top, scn.k_cutoff);
        // the table also carries the μ̄-only pairs the proposition sweep skips
        let slots = 4 * top;
        let mut cur = vec![0u8; slots];
        let mut all: Vec<Vec<u8>> = Vec::new();
        fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
            if slot == cur.len() {
                out.push(cur.clone());
                return;
            }
            for k in 0..=left {
                cur[slot] = k as u8;
                rec(out, cur, slot + 1, left - k);
            }
            cur[slot] = 0;
        }
        for total in 1..=scn.k_cutoff {
            rec(&mut all, &mut cur, 0, total);
        }
        all.sort();
        all.dedup();
        for v in all {
            let pair = MultiIndexPair {
                mu_plus: v[..top].to_vec(),
                mu_minus: v[top..2 * top].to_vec(),
                nu_plus: v[2 * top..3 * top].to_vec(),
                nu_minus: v[3 * top..].to_vec(),
            };
            if pair.nu_total() == 0 {
                flat.push(pair);
            }
        }
        flat
    };

    let static_modes = {
        let mut gens = Vec::new();
        for j in 0..top {
            let e = &art.spectrum.eigenvectors[j];
            gens.push(art.lp.project(e));
            gens.push(art.lm.project(e));
        }
        mode_set(&gens, 1e-9)?
    };
    let static_fock = build_fock(static_modes, scn.fock.n_max, scn.fock.dim_cap)?;
    let static_pe = energy_projection(&static_fock, grid, scn.e_max)?;

    // sampled Weyl set for the τ norm surrogates
    let f_samples: Vec<(Vec<f64>, Vec<f64>, f64)> = {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, "tau-samples"));
        (0..6)
            .map(|_| {
                let mut f = SingleParticleVector::zero(grid.clone());
                for b in art.lreal.basis.iter().take(6) {
                    f = f.add_scaled(Complex64::new(rng.random::<f64>() - 0.5, 0.0), b);
                }
                let scale = 0.5 / f.norm();
                f = f.scaled(Complex64::new(scale, 0.0));
                let dec = crate::functionals::decompose_in_l(
                    &f,
                    &art.spectrum.eigenvectors[..top],
                )
                .expect("sampled f lies in L");
                (dec.c_plus, dec.c_minus, f.norm_sq())
            })
            .collect()
    };
    let tau_sup = |pair: &MultiIndexPair| -> f64 {
        f_samples
            .iter()
            .map(|(cp, cm, n2)| tau_on_weyl(pair, cp, cm, *n2).norm())
            .fold(0.0f64, f64::max)
    };

    let mut entries = Vec::new();
    let mut worst_sest = f64::NEG_INFINITY;
    let mut worst_tau_ratio: f64 = 0.0;
    let mut rng_static = ChaCha8Rng::seed_from_u64(task_seed(seed, "static-norms"));
    for pair in &table_pairs {
        let op = s_operator(
            &static_fock,
            &art.lp,
            &art.lm,
            &art.spectrum.eigenvectors[..top],
            pair,
            None,
        )?;
        let s_norm = s_single_norm(&static_fock, &static_pe, &op, &mut rng_static)?;
        let s_bound = s_estimate_rhs(scn.e_max, &art.spectrum.eigenvalues[..top], pair);
        worst_sest = worst_sest.max(s_norm - s_bound);
        let tau_value = tau_sup(pair);
        worst_tau_ratio = worst_tau_ratio.max(tau_value / tau_estimate_rhs(pair));
        entries.push((pair.order(), tau_value, s_norm));
    }
    checks.push(Check::new(
        "s_estimate_margins",
        "ladder_norm_estimate",
        worst_sest,
        0.0,
        1e-8,
    ));
    checks.push(Check::new(
        "tau_majorant_sampled",
        "dual_norm_majorant",
        worst_tau_ratio,
        1.0,
        0.0,
    ));

    let mut static_rows = Vec::new();
    for &p in &scn.p_values {
        let s_p = art.spectrum.schatten(p)?;
        let stat = p_nuclear_static(p, &entries, scn.k_cutoff, scn.e_max, s_p)?;

        // series majorant over the computed table, orders ≤ K
        let lnfact = ln_factorial_table(scn.k_cutoff);
        let mut factor = 0.0;
        for k in 0..=scn.k_cutoff {
            factor += ((32.0 * scn.e_max).powf(0.5 * p * k as f64) * s_p.powi(k as i32))
                / lnfact[k].exp().powf(0.5 * p);
        }
        let majorant = factor.powi(4);
        let table_sum: f64 =
            entries.iter().map(|(_, t, s)| t.powf(p) * s.powf(p)).sum();
        checks.push(Check::new(
            format!("series_majorant_p{p}"),
            "series_majorant",
            table_sum,
            majorant,
            0.0,
        ));

        let k_hi = stat.estimates.len() - 1;
        if k_hi >= 1 {
            let rel = (stat.estimates[k_hi] - stat.estimates[k_hi - 1]).abs()
                / stat.estimates[k_hi - 1].max(1e-300);
            checks.push(Check::new(
                format!("static_cutoff_stability_p{p}"),
                "series_domination",
                rel,
                0.10,
                0.0,
            ));
        }
        static_rows.push(json!({
            "p": p,
            "estimates": stat.estimates,
            "per_order": stat.per_order,
            "tail_majorant_ln": stat.tail_majorant_ln,
            "table_sum": table_sum,
            "majorant": majorant,
        }));
    }
    // p-monotonicity of the static estimate on the same table
    if scn.p_values.contains(&0.5) && scn.p_values.contains(&1.0) {
        let e05 = p_nuclear_static(0.5, &entries, scn.k_cutoff, scn.e_max, 1.0)?;
        let e1 = p_nuclear_static(1.0, &entries, scn.k_cutoff, scn.e_max, 1.0)?;
        checks.push(Check::new(
            "static_p_monotonicity",
            "nuclear_index_monotonicity",
            e1.estimates[scn.k_cutoff],
            e05.estimates[scn.k_cutoff],
            1e-12,
        ));
    }

    let data = json!({
        "calibrated_ratio": chat,
        "sup_h_inv_sq": sup_inv_sq,
        "pairs": pairs.len(),
        "configs": config_rows,
        "pi_norm": sweep_rows,
        "static": static_rows,
    });
    Ok(Report::new("nuclearity", scn, seed, checks, data))
}

// ---------------------------------------------------------------------------
// full run
// ---------------------------------------------------------------------------

pub struct FullRun {
    pub pass: bool,
    pub summary_path: std::path::PathBuf,
}

pub fn cmd_full(scn: &Scenario, out_dir: &Path, seed: u64) -> Result<FullRun> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("scenario.toml"), scn.to_toml()?)?;

    let mut commands = Vec::new();

    let spectrum = cmd_spectrum(scn, seed)?;
    spectrum.write_json(&out_dir.join("spectrum.json"))?;
    commands.push(("spectrum", spectrum.pass, "spectrum.json"));

    let corr = cmd_corr_scan(scn, None, None, None, seed)?;
    corr.report.write_json(&out_dir.join("corr_scan.json"))?;
    crate::report::write_scan_csv(&out_dir.join("corr_scan.csv"), scn.s, &corr.rows)?;
    commands.push(("corr-scan", corr.report.pass, "corr_scan.json"));

    let kernel = cmd_kernel_sweep(scn, seed)?;
    kernel.report.write_json(&out_dir.join("kernel_sweep.json"))?;
    crate::report::write_kernel_csv(&out_dir.join("kernel_sweep.csv"), &kernel.rows)?;
    commands.push(("kernel-sweep", kernel.report.pass, "kernel_sweep.json"));

    let fock = cmd_fock_verify(scn, seed)?;
    fock.write_json(&out_dir.join("fock_verify.json"))?;
    commands.push(("fock-verify", fock.pass, "fock_verify.json"));

    let nuclearity = cmd_nuclearity(scn, seed)?;
    nuclearity.write_json(&out_dir.join("nuclearity.json"))?;
    commands.push(("nuclearity", nuclearity.pass, "nuclearity.json"));

    let pass = commands.iter().all(|(_, p, _)| *p);
    let summary = json!({
        "schema_version": crate::report::SCHEMA_VERSION,
        "seed": seed,
        "pass": pass,
        "commands": commands.iter().map(|(name, p, file)| json!({
            "command": name,
            "pass": p,
            "file": file,
        })).collect::<Vec<_>>(),
    });
    let summary_path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(&summary_path, text)?;
    Ok(FullRun { pass, summary_path })
}
