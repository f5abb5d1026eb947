//! Periodic grids, Fourier symbols and multipliers, Sobolev and Lebesgue norms.

mod field;
mod grid;
mod symbol;

pub use field::{apply_multiplier, lp_norm, sobolev_norm, GridFunction};
pub(crate) use field::{shift_spectrum, sobolev_norm_spectrum};
pub use grid::{make_grid, Grid, MIN_POINTS};
pub use symbol::{
    coercivity_constants, symbol_eval, symbol_mul, symbol_pow, symbol_shift_sub, Multiplier, SymbolFactor,
    SymbolSpec, TabulatedSymbol, BEST_CONSTANT_SAMPLES,
};
