//! `d(c)` along a velocity grid and where its convexity flips. For the
//! Boussinesq equation with p = 2 the flip sits at c² = (p-1)/4.
//!
//!     cargo run --release --example dc_convexity

use nonlocal_wave_lab::model::PdeModel;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::stability::{c_grid, dc_curve, threshold_boussinesq, DcOptions};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(2048, 160.0)?;
    let m = PdeModel::boussinesq(2.0)?;
    let cs = c_grid(0.0, 0.94, 0.02)?;
    let curve = dc_curve(&m, &cs, &g, &DcOptions::default())?;
    println!("   c          d          d'      M(Phi)        d''   class");
    for k in (0..cs.len()).step_by(3) {
        println!(
            "{:5.2} {:10.6} {:10.6} {:10.6} {:10.4} {}",
            curve.c_samples[k],
            curve.d_values[k],
            curve.d_prime[k],
            curve.d_prime_from_m[k],
            curve.d_second[k],
            curve.classes[k].label()
        );
    }
    let w = threshold_boussinesq(2.0)?;
    println!("flips at c = {:?}; predicted window c^2 in ({}, {})", curve.flips(), w.c_sq_low, w.c_sq_high);
    Ok(())
}
