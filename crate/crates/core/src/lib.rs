//! Pseudo-spectral laboratory for the nonlocal nonlinear wave equation
//!
//! ```text
//! u_tt - L u_xx = B (g(u))_xx,    g(u) = σ |u|^{p-1} u
//! ```
//!
//! where `L` and `B` are Fourier multipliers with positive even symbols. The crate
//! computes solitary waves, the conserved and variational functionals of the
//! equation, time evolution of the first-order system `u_t = w_x`,
//! `w_t = L u_x + B (g(u))_x`, and the orbital-stability and blow-up experiments
//! built on top of them.
//!
//! Module map:
//!
//! * [`spectral`]: periodic grid, symbols, multipliers, norms
//! * [`model`]: the validated `(L, B, p, σ)` model and its regimes
//! * [`functionals`]: `I_c`, `J_c`, `Q`, energy, momentum, `X`-norm, `d(c)`
//! * [`waves`]: closed-form waves, fixed-point and variational solvers
//! * [`evolution`]: integrating-factor RK4 time stepping, blow-up detection
//! * [`stability`]: orbital distance, `d(c)` curves, blow-up data, experiments
//! * [`io`]: run configuration, CSV/JSON emission, CLI command drivers

pub mod error;
pub mod evolution;
pub mod functionals;
pub mod io;
pub mod model;
pub mod spectral;
pub mod stability;
pub mod waves;

pub use error::{Error, Result};
