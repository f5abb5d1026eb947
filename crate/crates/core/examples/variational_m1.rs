//! The constrained minimization `m₁(c) = inf { I_c(ψ) : Q(ψ) = 1 }`, its link to
//! the traveling wave, and the shape of `c ↦ m₁(c)`.
//!
//!     cargo run --release --example variational_m1

use nonlocal_wave_lab::model::PdeModel;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::waves::{exact_boussinesq_wave, minimize_m1, wave_from_minimizer, SolverOptions};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(2048, 160.0)?;
    let m = PdeModel::boussinesq(3.0)?;
    let opts = SolverOptions::default();

    let (psi, m1) = minimize_m1(&m, 0.3, &g, 1.0, &opts)?;
    let phi = wave_from_minimizer(&psi, m1, m.p());
    let exact = exact_boussinesq_wave(3.0, 0.3, &g)?;
    println!("c=0.3: m1 = {m1:.10}, rescaled minimizer vs wave: {:.2e}", phi.max_abs_diff(exact.profile())?);

    let (_, m2) = minimize_m1(&m, 0.3, &g, 2.0, &opts)?;
    println!("m_2 / m_1 = {:.10} (expected 2^(2/(p+1)) = {:.10})", m2 / m1, 2f64.sqrt());

    println!("\n   c        m1(c)");
    for k in 0..10 {
        let c = 0.095 * k as f64;
        println!("{c:6.3} {:12.8}", minimize_m1(&m, c, &g, 1.0, &opts)?.1);
    }
    Ok(())
}
