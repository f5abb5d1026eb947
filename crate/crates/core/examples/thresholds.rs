//! Closed-form stability thresholds.
//!
//!     cargo run --release --example thresholds

use nonlocal_wave_lab::stability::{threshold_boussinesq, threshold_klein_gordon};

fn main() -> nonlocal_wave_lab::Result<()> {
    println!("  p   L=I: c^2 threshold   Boussinesq window (c^2)");
    for p in [2.0, 3.0, 4.0, 5.0, 7.0] {
        let w = threshold_boussinesq(p)?;
        let window = if w.empty { "empty".to_string() } else { format!("({}, {})", w.c_sq_low, w.c_sq_high) };
        println!("{p:3}   {:<20.6} {window}", threshold_klein_gordon(p)?);
    }
    Ok(())
}
