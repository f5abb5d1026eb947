//! Fourier multipliers with symbols `prefactor·∏(1+aξ²)^e`: application, composition,
//! orders and Sobolev norms.
//!
//!     cargo run --release --example multipliers

use nonlocal_wave_lab::spectral::{sobolev_norm, Grid, GridFunction, SymbolFactor, SymbolSpec};

fn main() -> nonlocal_wave_lab::Result<()> {
    let g = Grid::new(512, 40.0)?;
    let f = GridFunction::from_fn(&g, |x| (-x * x / 4.0).exp())?;

    let b = SymbolSpec::factor(1.0, -1.0)?;
    let l = SymbolSpec::new(1.0, vec![SymbolFactor { a: 1.0, e: 1.0 }, SymbolFactor { a: 2.0, e: -1.0 }])?;
    println!("b: order {}, l: order {}", b.order(), l.order());

    let two_steps = f.apply(&b)?.apply(&l)?;
    let one_step = f.apply(&b.mul(&l))?;
    println!("apply(b) then apply(l) vs apply(b*l): {:.2e}", two_steps.max_abs_diff(&one_step)?);

    // (1 - ∂²) inverts b
    let back = f.apply(&b)?.apply(&SymbolSpec::factor(1.0, 1.0)?)?;
    println!("(1-d^2) B f vs f: {:.2e}", back.max_abs_diff(&f)?);

    for s in [0.0, 0.5, 1.0, 2.0] {
        println!("H^{s} norm of exp(-x^2/4): {:.10}", sobolev_norm(&f, s));
    }
    Ok(())
}
