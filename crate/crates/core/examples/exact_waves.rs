//! Closed-form solitary waves and how well they satisfy the profile equation
//! on a periodic grid.
//!
//!     cargo run --release --example exact_waves

use nonlocal_wave_lab::model::Regime;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::waves::{
    exact_boussinesq_wave, exact_double_dispersion_wave, exact_improved_boussinesq_wave, ode_residual,
};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(1024, 80.0)?;
    let waves = [
        ("Boussinesq p=3 c=0", exact_boussinesq_wave(3.0, 0.0, &g)?),
        ("Boussinesq p=2 c=0.5", exact_boussinesq_wave(2.0, 0.5, &g)?),
        ("improved Boussinesq p=3 c=1.5", exact_improved_boussinesq_wave(3.0, 1.5, &g)?),
        ("double dispersion (1,1) p=3 c=0.5", exact_double_dispersion_wave(3.0, 0.5, 1.0, 1.0, &g, Regime::A)?),
        ("double dispersion (2,1) p=2 c=2", exact_double_dispersion_wave(2.0, 2.0, 2.0, 1.0, &g, Regime::B)?),
    ];
    println!("{:<36} {:>12} {:>12} {:>12}", "wave", "amplitude", "residual", "d(c)");
    for (name, w) in &waves {
        let r = ode_residual(w.profile(), w.model(), w.c());
        println!("{name:<36} {:>12.6} {:>12.2e} {:>12.6}", w.profile().sup_norm(), r, w.diagnostics().d);
    }
    Ok(())
}
