//! The localization operator T: build L± from a bump family, choose the
//! smearing function h with its positivity certificate, diagonalize T and
//! print eigenvalues, Schatten sums and the subadditivity margins.
//!
//! Run with: cargo run --release --example localization_spectrum

use nucheck::grid::{build_grid, GridSpec};
use nucheck::localization::{
    build_l_pm, build_t, choose_h, kosaki_margin, LocalizationSign, TestFunctionFamily,
};

fn main() -> nucheck::Result<()> {
    let grid = build_grid(GridSpec { s: 3, n: 16, pmax: 8.0, half_shift: true })?;
    let family = TestFunctionFamily::standard(&grid, 1.0, 13)?;
    println!("family of {} members, sampled rank {}", family.len(), family.sample_rank(1e-8)?);

    let lp = build_l_pm(&grid, &family, LocalizationSign::Plus, 1e-8)?;
    let lm = build_l_pm(&grid, &family, LocalizationSign::Minus, 1e-8)?;
    println!("dim L+ = {}, dim L- = {}", lp.dim(), lm.dim());

    let h = choose_h(&grid, 1.0, 4.0)?;
    println!("h certificate: min h̃ on the energy ball = {:.6}", h.min_in_ball);

    let spec = build_t(&grid, &lp, &lm, 4.0, 0.95, &h)?;
    println!("\nleading eigenvalues of T:");
    for (j, t) in spec.eigenvalues.iter().take(8).enumerate() {
        println!("  t_{j} = {t:.6}");
    }
    for p in [0.5, 1.0] {
        println!("‖T^{p}‖₁ = {:.6}", spec.schatten(p)?);
    }

    println!("\nsubadditivity margins ‖A^p‖₁ + ‖B^p‖₁ − ‖(A+B)^p‖₁ at p = 1/2:");
    for a in 0..4 {
        for b in (a + 1)..4 {
            let margin = kosaki_margin(
                &spec.component_eigenvalues(a),
                &spec.component_eigenvalues(b),
                &spec.pair_sum_eigenvalues(a, b),
                0.5,
            )?;
            println!(
                "  {} + {}: {margin:+.6}",
                spec.component_labels[a], spec.component_labels[b]
            );
        }
    }
    Ok(())
}
