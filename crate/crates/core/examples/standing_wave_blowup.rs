//! Blow-up of the Boussinesq standing wave scaled by λ > 1, with the
//! low-wavenumber band removed so the data have a periodic primitive.
//!
//!     cargo run --release --example standing_wave_blowup

use nonlocal_wave_lab::evolution::EvolveOptions;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::stability::{blowup_experiment, StabilityOptions};
use nonlocal_wave_lab::waves::exact_boussinesq_wave;

fn main() -> nonlocal_wave_lab::Result<()> {
    // removing the band |ξ| < h changes λΦ₀ by O(L^{-1/2}); a long box keeps the data inside the blow-up set
    let g = Grid::new(32768, 2048.0)?;
    let wave = exact_boussinesq_wave(3.0, 0.0, &g)?;
    let h = g.first_nonzero_wavenumber();
    let opts = StabilityOptions { evolve: EvolveOptions { snapshot_stride: 0, ..Default::default() }, ..Default::default() };
    let rep = blowup_experiment(&wave, 1.05, h, 0.002, 20.0, &opts)?;
    println!("filter moved the data by {:.2e} (relative)", rep.filter_distance);
    println!("E(U0) - d(0) = {:.4e}, 2I(u0) - Q(u0) = {:.4e}", rep.initial_ecm - rep.d_c, rep.initial_virial);
    println!("status {:?}; H'' > 0 from t = {:?}", rep.status, rep.levine_positive_from);
    Ok(())
}
