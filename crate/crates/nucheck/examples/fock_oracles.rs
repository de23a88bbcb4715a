//! Fock-space oracles: the Weyl operator against the coherent-state closed
//! form, energy bounds with randomized arguments, and the N-point harmonic
//! bound with its truncation slack.
//!
//! Run with: cargo run --release --example fock_oracles

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use nucheck::fock::{
    build_fock, energy_bound_check, energy_projection, harmonic_bound_check, mode_set,
    weyl_matrix,
};
use nucheck::grid::{build_grid, translate, GridSpec, SingleParticleVector, SpacetimePoint};
use nucheck::localization::{build_l_pm, build_t, choose_h, LocalizationSign, TestFunctionFamily};

fn main() -> nucheck::Result<()> {
    let grid = build_grid(GridSpec { s: 3, n: 12, pmax: 6.0, half_shift: true })?;
    let family = TestFunctionFamily::standard(&grid, 1.0, 4)?;
    let lp = build_l_pm(&grid, &family, LocalizationSign::Plus, 1e-8)?;
    let lm = build_l_pm(&grid, &family, LocalizationSign::Minus, 1e-8)?;
    let h = choose_h(&grid, 1.0, 4.0)?;
    let spec = build_t(&grid, &lp, &lm, 4.0, 0.95, &h)?;

    // Weyl operator on two modes, ‖f‖ = 1/2
    let fock = build_fock(mode_set(&spec.eigenvectors[..2], 1e-10)?, 8, 20_000)?;
    let coeffs = [Complex64::new(0.3, 0.2), Complex64::new(-0.25, 0.2)];
    let fnorm2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let w = weyl_matrix(&fock, &coeffs)?;
    let idx = fock.vacuum_index();
    println!(
        "⟨Ω|W(f)Ω⟩ = {:.8} + {:.1e}i  vs  e^(−‖f‖²/2) = {:.8}",
        w.column(idx)[idx].re,
        w.column(idx)[idx].im,
        (-0.5 * fnorm2).exp()
    );

    // energy bounds, randomized
    let eb_fock = build_fock(mode_set(&spec.eigenvectors[..3], 1e-10)?, 5, 20_000)?;
    let pe = energy_projection(&eb_fock, &grid, 4.0)?;
    println!("\nP_E keeps {} of {} Fock states at E = 4", pe.rank(), eb_fock.dim());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let f = {
            let mut v = SingleParticleVector::zero(grid.clone());
            for m in eb_fock.modes.modes() {
                let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                v = v.add_scaled(c, m);
            }
            v
        };
        let check = energy_bound_check(&eb_fock, &pe, &grid, &[f], 1e-7, &mut rng)?;
        worst = worst.min(check.margin);
    }
    println!("energy bounds, 10 random trials: min margin = {worst:+.3e}");

    // harmonic bound for two separated translations
    let g = lp.project(&spec.eigenvectors[0]);
    let points = vec![SpacetimePoint::zero(3), SpacetimePoint::spatial(vec![2.0, 0.0, 0.0])];
    let gens: Vec<SingleParticleVector> =
        points.iter().map(|x| translate(&g, x)).collect::<nucheck::Result<_>>()?;
    let hfock = build_fock(mode_set(&gens, 1e-12)?, 5, 20_000)?;
    let hpe = energy_projection(&hfock, &grid, 4.0)?;
    let hc = harmonic_bound_check(&hfock, &hpe, &grid, &h, &g, &points, 1e-7, &mut rng)?;
    println!(
        "\nharmonic bound (N = 2): lhs = {:.6}, rhs = {:.6}, margin = {:+.3e}, slack = {:.3e}",
        hc.lhs, hc.rhs, hc.margin, hc.slack
    );
    Ok(())
}
