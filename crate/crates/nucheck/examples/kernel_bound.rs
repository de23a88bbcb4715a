//! Kernel operator-norm sweep: ‖χ(O_ρ) ω^{-2} χ_x(O_ρ)‖ by FFT power iteration
//! against the decay bound with the closed-form transform constant.
//!
//! Run with: cargo run --release --example kernel_bound

use rand::SeedableRng;

use nucheck::correlations::{kernel_norm_bound, kernel_split};
use nucheck::grid::{build_grid, GridSpec};
use nucheck::localization::SmoothCutoff;

fn main() -> nucheck::Result<()> {
    let grid = build_grid(GridSpec { s: 3, n: 24, pmax: 8.0, half_shift: true })?;
    let rho = 0.8;
    let pad = 0.2;
    let cutoff = SmoothCutoff::new(&grid, rho, pad)?;

    let split = kernel_split(&grid);
    println!(
        "symbol split ω^{{-1}} = L² part ({:.4}) + bounded part (sup {:.4})",
        split.l2_part, split.sup_part
    );

    let lo = 3.0 * (rho + pad);
    let hi = 0.95 * grid.wrap_limit();
    println!("valid zone [{lo:.3}, {hi:.3}]\n");
    println!("{:>8} {:>12} {:>12} {:>12}", "|x|", "computed", "bound", "margin");
    for k in 0..6 {
        let rad = lo + (hi - lo) * k as f64 / 5.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(k);
        let row = kernel_norm_bound(&grid, &cutoff, &[rad, 0.0, 0.0], &mut rng)?;
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:>12.6}",
            row.x_radius, row.computed, row.bound, row.margin
        );
    }
    Ok(())
}
