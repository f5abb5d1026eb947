//! A slow wave (c² below 1/3) scaled by λ > 1 leaves the orbit by blowing up.
//! Prints the `Σ₋` bookkeeping along the run.
//!
//!     cargo run --release --example klein_gordon_blowup

use nonlocal_wave_lab::model::PdeModel;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::stability::{stability_experiment, Perturbation, StabilityOptions};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(1024, 80.0)?;
    let m = PdeModel::regularized_klein_gordon(3.0)?;
    let opts = StabilityOptions { dt: Some(1e-3), distance_stride: 100, ..Default::default() };
    let rep = stability_experiment(&m, 0.1, &Perturbation::Scale { lambda: 1.05 }, 20.0, &g, &opts)?;
    let inv = &rep.invariance;
    println!("status {:?}", rep.status);
    println!("initial data in Sigma-: {:?}", inv.initial);
    println!(
        "E + cM conserved to 1e-8 up to t = {:.3} (x-norm grown {:.1}x); Sigma- holds there: {}",
        inv.resolved_until, inv.resolved_growth, inv.sigma_minus_resolved
    );
    println!("Sigma- over every step: {} (first failure at {:?})", inv.sigma_minus_all, inv.first_sigma_failure);
    let s = rep.trajectory.stable_series();
    for v in s.iter().rev().step_by(200).take(6).collect::<Vec<_>>().into_iter().rev() {
        println!("t = {:.3}  sup|u| = {:.4e}  x-norm = {:.4e}", v.t, v.sup_norm, v.x_norm);
    }
    Ok(())
}
