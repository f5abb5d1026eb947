//! A fast wave of the regularized Klein-Gordon model (c² above the threshold
//! 1/3), slightly rescaled, stays near the orbit of translates.
//!
//!     cargo run --release --example orbital_stability

use nonlocal_wave_lab::model::PdeModel;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::stability::{stability_experiment, Perturbation, StabilityOptions};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(1024, 80.0)?;
    let m = PdeModel::regularized_klein_gordon(3.0)?;
    let opts = StabilityOptions { dt: Some(0.02), ..Default::default() };
    let rep = stability_experiment(&m, 0.8, &Perturbation::Scale { lambda: 1.01 }, 50.0, &g, &opts)?;
    println!("status {:?}", rep.status);
    for (t, d) in rep.distance_times.iter().zip(&rep.distances).step_by(25) {
        println!("t = {t:6.2}  distance to orbit {d:.4e}");
    }
    println!("E drift {:.1e}, M drift {:.1e}", rep.drift_e, rep.drift_m);
    Ok(())
}
