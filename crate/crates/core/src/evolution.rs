//! Time integration of `u_t = w_x`, `w_t = L u_x + B(g(u))_x`.
//!
//! Each Fourier mode of the linear part is a rotation at `ω(ξ) = |ξ|√l(ξ)`, which
//! we advance exactly. The nonlinear term is handled by classical RK4 in the
//! rotating frame (integrating-factor RK4), so the step size is limited only by
//! the nonlinearity and never by the dispersion.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::SystemState;
use crate::model::{power_term, PdeModel};
use crate::spectral::{Grid, GridFunction};

/// Default ratio `x_norm(t) / x_norm(0)` treated as blow-up.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;

/// Per-mode coefficients of the exact linear flow over one step.
///
/// `û ← cos·û + i·su·ŵ`, `ŵ ← cos·ŵ + i·sw·û`.
#[derive(Clone, Debug)]
pub struct LinearPropagator {
    pub dt: f64,
    pub cos: Vec<f64>,
    pub su: Vec<f64>,
    pub sw: Vec<f64>,
}

impl LinearPropagator {
    fn apply(&self, u: &[Complex64], w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut nu = Vec::with_capacity(u.len());
        let mut nw = Vec::with_capacity(u.len());
        for j in 0..u.len() {
            let (a, b) = (u[j], w[j]);
            nu.push(a * self.cos[j] + Complex64::new(-b.im, b.re) * self.su[j]);
            nw.push(b * self.cos[j] + Complex64::new(-a.im, a.re) * self.sw[j]);
        }
        (nu, nw)
    }

    fn apply_u(&self, u: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
        (0..u.len()).map(|j| u[j] * self.cos[j] + Complex64::new(-w[j].im, w[j].re) * self.su[j]).collect()
    }

    /// Propagates `(0, w)`: the only shape the nonlinear increments take.
    fn apply_w_only(&self, w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let nu = w.iter().zip(&self.su).map(|(b, s)| Complex64::new(-b.im, b.re) * *s).collect();
        let nw = w.iter().zip(&self.cos).map(|(b, c)| b * *c).collect();
        (nu, nw)
    }
}

/// Exact linear flow over `dt` (any sign). The Nyquist mode carries no derivative
/// and is left unchanged, as is `ξ = 0`.
pub fn linear_propagator(grid: &Grid, model: &PdeModel, dt: f64) -> LinearPropagator {
    let ny = grid.nyquist_index();
    let n = grid.n();
    let mut cos = vec![1.0; n];
    let mut su = vec![0.0; n];
    let mut sw = vec![0.0; n];
    for (j, &k) in grid.wavenumbers().iter().enumerate() {
        if j == ny || k == 0.0 {
            continue;
        }
        let l = model.l().eval(k);
        let omega = k.abs() * l.sqrt();
        let theta = omega * dt;
        // sin(ωdt)/ω, with its ω → 0 limit dt
        let sinc = if theta.abs() < 1e-8 { dt * (1.0 - theta * theta / 6.0) } else { theta.sin() / omega };
        cos[j] = theta.cos();
        su[j] = k * sinc;
        sw[j] = k * l * sinc;
    }
    LinearPropagator { dt, cos, su, sw }
}

/// Zero-padding factor used for the nonlinear term: `(p+1)/2` for integer `p ≤ 5`,
/// none otherwise.
pub fn dealias_factor(p: f64) -> Option<f64> {
    (p.fract() == 0.0 && (2.0..=5.0).contains(&p)).then(|| 0.5 * (p + 1.0))
}

struct Padding {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Padding {
    /// Values of the trigonometric interpolant of `uh` on the `m`-point grid.
    fn upsample(&self, uh: &[Complex64]) -> Vec<f64> {
        let (n, m) = (uh.len(), self.m);
        let half = n / 2;
        let up = m as f64 / n as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..half {
            buf[j] = uh[j] * up;
        }
        for j in half + 1..n {
            buf[m - n + j] = uh[j] * up;
        }
        // the unpaired mode is split between ±n/2 so the padded field stays real
        buf[half] = uh[half] * (0.5 * up);
        buf[m - half] = uh[half] * (0.5 * up);
        self.inverse.process(&mut buf);
        let inv_m = 1.0 / m as f64;
        buf.iter().map(|z| z.re * inv_m).collect()
    }
}

/// The RK4 stepper bound to one model, grid and step.
pub struct Integrator {
    grid: Grid,
    p: f64,
    sigma: f64,
    /// `ξ·b(ξ)`, zero at the Nyquist mode.
    kb: Vec<f64>,
    full: LinearPropagator,
    half: LinearPropagator,
    padding: Option<Padding>,
}

impl Integrator {
    pub fn new(model: &PdeModel, grid: &Grid, dt: f64, dealias: bool) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt}")));
        }
        let ny = grid.nyquist_index();
        let kb = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| if j == ny { 0.0 } else { k * model.b().eval(k) })
            .collect();
        let padding = match (dealias, dealias_factor(model.p())) {
            (true, Some(f)) => {
                let n = grid.n();
                let mut m = (f * n as f64).ceil() as usize;
                m += m % 2;
                let mut planner = FftPlanner::new();
                Some(Padding { m, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) })
            }
            _ => None,
        };
        Ok(Integrator {
            grid: grid.clone(),
            p: model.p(),
            sigma: model.sigma().value(),
            kb,
            full: linear_propagator(grid, model, dt),
            half: linear_propagator(grid, model, 0.5 * dt),
            padding,
        })
    }

    pub fn dt(&self) -> f64 {
        self.full.dt
    }

    /// Spectrum of `g(u)` on the working grid, dealiased when padding is on.
    fn nonlinear_spectrum(&self, uh: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let g = |v: f64| self.sigma * power_term(v, self.p);
        match &self.padding {
            None => {
                let mut buf = uh.to_vec();
                self.grid.inverse_in_place(&mut buf);
                for z in buf.iter_mut() {
                    *z = Complex64::new(g(z.re), 0.0);
                }
                self.grid.forward_in_place(&mut buf);
                buf
            }
            Some(pad) => {
                let m = pad.m;
                let half = n / 2;
                let mut buf: Vec<Complex64> = pad.upsample(uh).into_iter().map(|v| Complex64::new(g(v), 0.0)).collect();
                pad.forward.process(&mut buf);
                let down = n as f64 / m as f64;
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..half {
                    out[j] = buf[j] * down;
                }
                for j in half + 1..n {
                    out[j] = buf[m - n + j] * down;
                }
                out[half] = buf[m - half] * down;
                out
            }
        }
    }

    /// `ŵ`-increment `iξ b ĝ(u)`.
    fn rhs(&self, uh: &[Complex64]) -> Vec<Complex64> {
        let mut g = self.nonlinear_spectrum(uh);
        for (z, kb) in g.iter_mut().zip(&self.kb) {
            *z = Complex64::new(-z.im, z.re) * *kb;
        }
        g
    }

    /// One integrating-factor RK4 step in place.
    pub fn step(&self, uh: &mut Vec<Complex64>, wh: &mut Vec<Complex64>) {
        let dt = self.full.dt;
        let n = uh.len();
        let axpy = |x: &[Complex64], s: f64, y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(a, b)| a + b * s).collect()
        };

        let k1 = self.rhs(uh);
        // stage 2: E₂(U + dt/2·(0,k1))
        let w2 = axpy(wh, 0.5 * dt, &k1);
        let k2 = self.rhs(&self.half.apply_u(uh, &w2));
        // stage 3: E₂U + dt/2·(0,k2)
        let k3 = self.rhs(&self.half.apply_u(uh, wh));
        // stage 4: E U + dt·E₂(0,k3)
        let (eu, ew) = self.full.apply(uh, wh);
        let (k3u, _) = self.half.apply_w_only(&k3);
        let u4 = axpy(&eu, dt, &k3u);
        let k4 = self.rhs(&u4);

        let (e1u, e1w) = self.full.apply_w_only(&k1);
        let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
        let (e23u, e23w) = self.half.apply_w_only(&k23);
        let s = dt / 6.0;
        for j in 0..n {
            uh[j] = eu[j] + (e1u[j] + e23u[j] * 2.0) * s;
            wh[j] = ew[j] + (e1w[j] + e23w[j] * 2.0 + k4[j]) * s;
        }
    }
}

/// Largest `|ξ b(ξ)| · |g'(u)|` over the grid and the samples of `u`.
pub fn nonlinear_rate(model: &PdeModel, u: &GridFunction) -> f64 {
    let grid = u.grid();
    let ny = grid.nyquist_index();
    let kb = grid
        .wavenumbers()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != ny)
        .map(|(_, &k)| (k * model.b().eval(k)).abs())
        .fold(0.0, f64::max);
    let p = model.p();
    let gprime = u.values().iter().map(|v| p * v.abs().powf(p - 1.0)).fold(0.0, f64::max);
    kb * gprime
}

/// `(default dt, refusal bound)`: `0.5/R` and the RK4 imaginary-axis limit `2√2/R`.
pub fn step_bounds(model: &PdeModel, u: &GridFunction) -> (f64, f64) {
    let r = nonlinear_rate(model, u);
    if r > 0.0 {
        (0.5 / r, 2.0 * 2f64.sqrt() / r)
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

/// One step of the scheme applied to a state; `dt` may be negative.
pub fn step_state(state: &SystemState, model: &PdeModel, dt: f64, dealias: bool) -> Result<SystemState> {
    let grid = state.grid().clone();
    let integ = Integrator::new(model, &grid, dt, dealias)?;
    let mut uh = state.u.spectrum();
    let mut wh = state.w.spectrum();
    integ.step(&mut uh, &mut wh);
    SystemState::new(
        GridFunction::from_spectrum(&grid, &uh),
        GridFunction::from_spectrum(&grid, &wh),
        state.t + dt,
    )
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Store a snapshot every `snapshot_stride` steps (0: first and last only).
    pub snapshot_stride: usize,
    pub blowup_factor: f64,
    pub dealias: bool,
    /// Hard cap on the number of steps; exceeding it aborts the run.
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { snapshot_stride: 100, blowup_factor: DEFAULT_BLOWUP_FACTOR, dealias: true, max_steps: 50_000_000 }
    }
}

/// Diagnostics of one time level.
///
/// Besides `E`, `M`, the X-norm and the sup norm, each sample keeps the
/// velocity-free pieces `⟨LB⁻¹u,u⟩`, `⟨B⁻¹u,u⟩` and `Q(u)`, so `I_c` can be formed
/// afterwards for any `c`, and the Levine functional `H = ½‖B^{-1/2}v‖²` (`v_x = u`;
/// NaN when `u` has nonzero mean).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub x_norm: f64,
    pub sup_norm: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub lb_quad: f64,
    pub b_quad: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl Sample {
    pub fn ic(&self, c: f64) -> f64 {
        0.5 * (self.lb_quad - c * c * self.b_quad)
    }

    pub fn ecm(&self, c: f64) -> f64 {
        self.e + c * self.m
    }

    fn is_finite(&self) -> bool {
        [self.e, self.m, self.x_norm, self.sup_norm, self.q].iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum RunStatus {
    Completed,
    /// `t_star` is the last time at which the solution was below threshold.
    BlewUp { t_star: f64 },
    Aborted { reason: String },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: PdeModel,
    pub dt: f64,
    pub times: Vec<f64>,
    pub series: Vec<Sample>,
    pub snapshots: Vec<SystemState>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        matches!(self.status, RunStatus::BlewUp { .. })
    }

    pub fn t_star(&self) -> Option<f64> {
        match self.status {
            RunStatus::BlewUp { t_star } => Some(t_star),
            _ => None,
        }
    }

    /// Samples recorded before the threshold was crossed.
    pub fn stable_series(&self) -> &[Sample] {
        if self.blew_up() {
            &self.series[..self.series.len().saturating_sub(1)]
        } else {
            &self.series
        }
    }

    pub fn last_state(&self) -> Option<&SystemState> {
        self.snapshots.last()
    }
}

struct Tables {
    inv_b: Vec<f64>,
    l_over_b: Vec<f64>,
    sob_u: Vec<f64>,
    sob_w: Vec<f64>,
    levine: Vec<f64>,
}

impl Tables {
    fn new(model: &PdeModel, grid: &Grid) -> Self {
        let ks = grid.wavenumbers();
        let s0 = model.s0();
        let sw = model.w_index();
        Tables {
            inv_b: ks.iter().map(|&k| 1.0 / model.b().eval(k)).collect(),
            l_over_b: ks.iter().map(|&k| model.l().eval(k) / model.b().eval(k)).collect(),
            sob_u: ks.iter().map(|&k| (1.0 + k * k).powf(s0)).collect(),
            sob_w: ks.iter().map(|&k| (1.0 + k * k).powf(sw)).collect(),
            levine: ks.iter().map(|&k| if k == 0.0 { 0.0 } else { 1.0 / (k * k * model.b().eval(k)) }).collect(),
        }
    }
}

/// With padding, `Q` is integrated on the padded grid: that is the quadrature
/// the dealiased scheme conserves, and it stays exact for a full spectrum.
fn sample(
    model: &PdeModel,
    grid: &Grid,
    tables: &Tables,
    pad: Option<&Padding>,
    uh: &[Complex64],
    wh: &[Complex64],
    t: f64,
) -> (Sample, Vec<f64>) {
    let u = grid.inverse(uh);
    let wt = grid.plancherel_weight();
    let mut acc = [0.0f64; 8];
    for j in 0..uh.len() {
        let (a, b) = (uh[j].norm_sqr(), wh[j].norm_sqr());
        acc[0] += tables.inv_b[j] * b;
        acc[1] += tables.l_over_b[j] * a;
        acc[2] += tables.inv_b[j] * (uh[j].conj() * wh[j]).re;
        acc[3] += tables.sob_u[j] * a;
        acc[4] += tables.sob_w[j] * b;
        acc[5] += tables.inv_b[j] * a;
        acc[6] += tables.levine[j] * a;
    }
    let p = model.p();
    let fine;
    let (nodes, h) = match pad {
        Some(pad) => {
            fine = pad.upsample(uh);
            (&fine, grid.length() / pad.m as f64)
        }
        None => (&u, grid.spacing()),
    };
    let q = if p == 3.0 {
        nodes.iter().map(|v| (v * v) * (v * v)).sum::<f64>() * h
    } else {
        nodes.iter().map(|v| v.abs().powf(p + 1.0)).sum::<f64>() * h
    };
    let sup = u.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
    let scale = sup.max(f64::MIN_POSITIVE);
    let mean_ok = uh[0].norm() / grid.n() as f64 <= 1e-12 * scale.max(1.0);
    let s = Sample {
        t,
        e: 0.5 * (acc[0] + acc[1]) * wt + model.sigma().value() / (p + 1.0) * q,
        m: acc[2] * wt,
        x_norm: (acc[3] * wt).sqrt() + (acc[4] * wt).sqrt(),
        sup_norm: sup,
        q,
        lb_quad: acc[1] * wt,
        b_quad: acc[5] * wt,
        h: if mean_ok { 0.5 * acc[6] * wt } else { f64::NAN },
    };
    (s, u)
}

/// Integrates from `u0` to `t_end` with a uniform step no larger than `dt`.
pub fn evolve(u0: &SystemState, model: &PdeModel, dt: f64, t_end: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(u0.u.is_finite() && u0.w.is_finite()) {
        return Err(Error::NonFinite("initial data".into()));
    }
    u0.u.check_grid(&u0.w)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {t_end}")));
    }
    if !(opts.blowup_factor > 1.0) {
        return Err(Error::InvalidParameter(format!("blow-up factor must exceed 1, got {}", opts.blowup_factor)));
    }
    let (_, bound) = step_bounds(model, &u0.u);
    if dt >= bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let grid = u0.grid().clone();
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { dt };
    let integ = Integrator::new(model, &grid, h, opts.dealias)?;
    let tables = Tables::new(model, &grid);

    let mut uh = u0.u.spectrum();
    let mut wh = u0.w.spectrum();
    let t0 = u0.t;
    let (s0, _) = sample(model, &grid, &tables, integ.padding.as_ref(), &uh, &wh, t0);
    let threshold = opts.blowup_factor * s0.x_norm;
    let mut times = vec![t0];
    let mut series = vec![s0];
    let mut snapshots = vec![u0.clone()];
    let mut status = RunStatus::Completed;
    if steps > opts.max_steps {
        status = RunStatus::Aborted { reason: format!("{steps} steps exceed the cap of {}", opts.max_steps) };
    } else {
        for k in 1..=steps {
            integ.step(&mut uh, &mut wh);
            let t = t0 + k as f64 * h;
            let (mut s, u) = sample(model, &grid, &tables, integ.padding.as_ref(), &uh, &wh, t);
            let finite = s.is_finite() && u.iter().all(|v| v.is_finite());
            if !finite || s.x_norm > threshold {
                if !finite {
                    s.x_norm = f64::INFINITY;
                }
                status = RunStatus::BlewUp { t_star: times[times.len() - 1] };
                times.push(t);
                series.push(s);
                break;
            }
            times.push(t);
            series.push(s);
            if k == steps || (opts.snapshot_stride > 0 && k % opts.snapshot_stride == 0) {
                let w = grid.inverse(&wh);
                snapshots.push(SystemState {
                    u: GridFunction::new(&grid, u)?,
                    w: GridFunction::new(&grid, w)?,
                    t,
                });
            }
        }
    }
    Ok(Trajectory { model: model.clone(), dt: h, times, series, snapshots, status })
}

/// Largest relative deviation of `E` and of `M` from their initial values,
/// over the samples preceding any blow-up.
pub fn conserved_drift(traj: &Trajectory) -> (f64, f64) {
    let s = traj.stable_series();
    let Some(first) = s.first() else { return (0.0, 0.0) };
    let rel = |x: f64, x0: f64| (x - x0).abs() / x0.abs().max(1e-30);
    s.iter().fold((0.0f64, 0.0f64), |(de, dm), v| (de.max(rel(v.e, first.e)), dm.max(rel(v.m, first.m))))
}

/// Spectral antiderivative with zero mean; `u` itself must have zero mean.
pub fn primitive_x(u: &GridFunction) -> Result<GridFunction> {
    let mean = u.mean();
    if mean.abs() > 1e-12 {
        return Err(Error::NonzeroMean(mean));
    }
    let grid = u.grid();
    let ny = grid.nyquist_index();
    let mut spec = u.spectrum();
    for (j, (z, &k)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        *z = if k == 0.0 || j == ny { Complex64::new(0.0, 0.0) } else { *z / Complex64::new(0.0, k) };
    }
    Ok(GridFunction::from_spectrum(grid, &spec))
}
