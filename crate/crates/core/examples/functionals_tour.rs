//! The functionals along a traveling wave: `I_c`, `Q`, energy, momentum, the
//! `E + cM` decomposition and the values `d(c)`, `m₁(c)`.
//!
//!     cargo run --release --example functionals_tour

use nonlocal_wave_lab::functionals::{
    dee_identities, ecm_decomposition, energy, functional_ic, functional_q, momentum, sigma_minus_check, x_norm,
    SystemState,
};
use nonlocal_wave_lab::model::PdeModel;
use nonlocal_wave_lab::spectral::Grid;
use nonlocal_wave_lab::waves::exact_wave;

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(1024, 80.0)?;
    let m = PdeModel::regularized_klein_gordon(3.0)?;
    let c = 0.4;
    let w = exact_wave(&m, c, &g)?;
    let phi = w.profile();
    println!("I_c(phi) = {:.12}", functional_ic(phi, &m, c));
    println!("Q(phi)   = {:.12}   (2 I_c = Q on the wave)", functional_q(phi, m.p()));

    let s = SystemState::traveling(phi, c);
    let (e, mm) = (energy(&s, &m)?, momentum(&s, &m)?);
    println!("E = {e:.12}, M = {mm:.12}, E + cM = {:.12}, decomposed {:.12}", e + c * mm, ecm_decomposition(&s, &m, c)?);

    let [d, d_from_m1, d_from_q] = dee_identities(&w, &m)?;
    println!("d(c) three ways: {d:.12} {d_from_m1:.12} {d_from_q:.12}");

    for lambda in [0.95, 1.05] {
        let s = SystemState::traveling(phi, c).scaled(lambda);
        let sm = sigma_minus_check(&s, &m, c, d)?;
        println!("lambda = {lambda}: x-norm {:.6}, in Sigma-: {}", x_norm(&s, &m), sm.both());
    }
    Ok(())
}
