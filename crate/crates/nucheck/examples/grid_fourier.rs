//! Momentum grid basics: build a half-shifted grid, transform a configuration
//! bump, and verify unitarity, translation covariance and the conjugation J.
//!
//! Run with: cargo run --release --example grid_fourier

use num_complex::Complex64;
use nucheck::grid::{
    build_grid, conjugate_j, to_config, to_momentum, translate, GridSpec, SpacetimePoint,
};

fn main() -> nucheck::Result<()> {
    let grid = build_grid(GridSpec { s: 3, n: 16, pmax: 8.0, half_shift: true })?;
    println!("grid: {} points, Δ = {}, δx = {}", grid.len(), grid.delta(), grid.dx());
    println!("min |p| = {} (half-shift keeps it positive)", grid.min_omega());
    println!("wrap limit = {}", grid.wrap_limit());

    // a real radial bump in configuration space
    let config: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let r = grid.config_radius(i);
            if r < 1.0 {
                Complex64::new((-1.0 / (1.0 - r * r)).exp(), 0.0)
            } else {
                Complex64::ZERO
            }
        })
        .collect();
    let f = to_momentum(&grid, &config)?;

    let cfg_norm2: f64 =
        config.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.config_weight();
    println!("Parseval: config {:.12e} vs momentum {:.12e}", cfg_norm2, f.norm_sq());

    let back = to_momentum(&grid, &to_config(&f))?;
    println!("round trip error: {:.3e}", back.sub(&f).norm() / f.norm());

    // J fixes transforms of real configuration data
    let jf = conjugate_j(&f);
    println!("‖Jf − f‖/‖f‖ = {:.3e} (real bump is J-invariant)", jf.sub(&f).norm() / f.norm());

    // translations: unitary, additive phases
    let x = SpacetimePoint::new(0.4, vec![1.0, -0.5, 0.25]);
    let y = SpacetimePoint::new(-0.1, vec![0.3, 0.8, -0.6]);
    let fx = translate(&f, &x)?;
    let fxy = translate(&fx, &y)?;
    let direct = translate(&f, &x.add(&y))?;
    println!("norm after translation: {:.12e} (was {:.12e})", fx.norm(), f.norm());
    println!("additivity error: {:.3e}", fxy.sub(&direct).norm() / f.norm());
    Ok(())
}
