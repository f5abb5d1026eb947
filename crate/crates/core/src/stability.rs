//! Stability and blow-up experiments.
//!
//! The orbital distance, the moment of instability `d(c)` with its convexity,
//! the λ-scaled blow-up data, the flow-invariant set `Σ₋(c)` and the Levine
//! functional are all observed on computed trajectories here.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, step_bounds, EvolveOptions, RunStatus, Sample, Trajectory};
use crate::functionals::{b_weighted_norm_sq, dee_from_wave, m1_from_wave, FunctionalReport, SigmaMinus, SystemState};
use crate::model::PdeModel;
use crate::spectral::{shift_spectrum, sobolev_norm, Grid, GridFunction};
use crate::waves::{solve_wave_fixed_point, SolverOptions, TravelingWave};

/// Relative drift of `E + cM` up to which a trajectory counts as resolved.
pub const RESOLVED_DRIFT: f64 = 1e-8;

/// Slack in the `((p+1)/(p-1)) d(c) < I_c(u)` check.
pub const IC_BOUND_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// thresholds

/// Convexity window `(p-1)/4 < c² < 1` of the Boussinesq moment of instability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoussinesqWindow {
    pub c_sq_low: f64,
    pub c_sq_high: f64,
    /// `p ≥ 5`: no velocity in the window.
    pub empty: bool,
}

pub fn threshold_boussinesq(p: f64) -> Result<BoussinesqWindow> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    let low = (p - 1.0) / 4.0;
    Ok(BoussinesqWindow { c_sq_low: low, c_sq_high: 1.0, empty: low >= 1.0 })
}

/// `(p-1)/(p+3)`: above it the `L = I` waves are stable, below it they blow up.
pub fn threshold_klein_gordon(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    Ok((p - 1.0) / (p + 3.0))
}

// ---------------------------------------------------------------------------
// orbital distance

#[derive(Clone, Copy, Debug)]
pub struct OrbitalOptions {
    /// Coarse candidate shifts per grid cell.
    pub upsample: usize,
}

impl Default for OrbitalOptions {
    fn default() -> Self {
        OrbitalOptions { upsample: 1 }
    }
}

struct OrbitalTarget {
    grid: Grid,
    uh: Vec<Complex64>,
    wh: Vec<Complex64>,
    ph: Vec<Complex64>,
    c: f64,
    wu: Vec<f64>,
    ww: Vec<f64>,
}

impl OrbitalTarget {
    fn new(state: &SystemState, wave: &TravelingWave, model: &PdeModel) -> Result<Self> {
        state.u.check_grid(wave.profile())?;
        state.u.check_grid(&state.w)?;
        let grid = state.grid().clone();
        let ks = grid.wavenumbers();
        Ok(OrbitalTarget {
            uh: state.u.spectrum(),
            wh: state.w.spectrum(),
            ph: wave.profile().spectrum(),
            c: wave.c(),
            wu: ks.iter().map(|&k| (1.0 + k * k).powf(model.s0())).collect(),
            ww: ks.iter().map(|&k| (1.0 + k * k).powf(model.w_index())).collect(),
            grid,
        })
    }

    /// `‖u - φ(·-y)‖_{H^{s₀}} + ‖w + cφ(·-y)‖_{H^{s₀-ρ/2}}`.
    fn distance(&self, y: f64) -> f64 {
        let mut ps = self.ph.clone();
        shift_spectrum(&self.grid, &mut ps, y);
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..ps.len() {
            a += self.wu[j] * (self.uh[j] - ps[j]).norm_sqr();
            b += self.ww[j] * (self.wh[j] + ps[j] * self.c).norm_sqr();
        }
        let w = self.grid.plancherel_weight();
        (a * w).sqrt() + (b * w).sqrt()
    }

    /// Distances at all shifts `y = offset + j·dx`, from two inverse transforms.
    fn coarse(&self, offset: f64) -> Vec<f64> {
        let n = self.grid.n();
        let w = self.grid.plancherel_weight();
        let mut ps = self.ph.clone();
        shift_spectrum(&self.grid, &mut ps, offset);
        let (mut su, mut sw) = (0.0, 0.0);
        let mut cu = vec![Complex64::new(0.0, 0.0); n];
        let mut cw = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            su += self.wu[j] * (self.uh[j].norm_sqr() + ps[j].norm_sqr());
            sw += self.ww[j] * (self.wh[j].norm_sqr() + self.c * self.c * ps[j].norm_sqr());
            cu[j] = self.uh[j] * ps[j].conj() * self.wu[j];
            cw[j] = self.wh[j] * ps[j].conj() * self.ww[j];
        }
        // Σ_k C_k e^{iξ_k j dx} = n · inverse(C)_j
        let xu = self.grid.inverse(&cu);
        let xw = self.grid.inverse(&cw);
        (0..n)
            .map(|j| {
                let a = (su - 2.0 * n as f64 * xu[j]) * w;
                let b = (sw + 2.0 * self.c * n as f64 * xw[j]) * w;
                a.max(0.0).sqrt() + b.max(0.0).sqrt()
            })
            .collect()
    }
}

/// Orbital distance and the optimal shift.
pub fn orbital_distance_with_shift(
    state: &SystemState,
    wave: &TravelingWave,
    model: &PdeModel,
    opts: &OrbitalOptions,
) -> Result<(f64, f64)> {
    let target = OrbitalTarget::new(state, wave, model)?;
    let dx = target.grid.spacing();
    let up = opts.upsample.max(1);
    let step = dx / up as f64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..up {
        let offset = i as f64 * step;
        for (j, d) in target.coarse(offset).into_iter().enumerate() {
            if d < best.0 {
                best = (d, offset + j as f64 * dx);
            }
        }
    }
    // golden-section refinement of the exact objective around the coarse optimum
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = target.distance(x1);
    let mut f2 = target.distance(x2);
    for _ in 0..100 {
        if (b - a).abs() < 1e-13 * target.grid.length() {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = target.distance(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = target.distance(x2);
        }
    }
    let exact_best = target.distance(best.1);
    let (d, y) = [(f1, x1), (f2, x2), (exact_best, best.1)]
        .into_iter()
        .fold((f64::INFINITY, 0.0), |m, v| if v.0 < m.0 { v } else { m });
    let len = target.grid.length();
    Ok((d, (y + 0.5 * len).rem_euclid(len) - 0.5 * len))
}

/// `inf_y ‖U - Φ_c(·-y)‖_X` over translates of `Φ_c = (φ_c, -cφ_c)`.
pub fn orbital_distance(state: &SystemState, wave: &TravelingWave, model: &PdeModel) -> Result<f64> {
    orbital_distance_with_shift(state, wave, model, &OrbitalOptions::default()).map(|v| v.0)
}

// ---------------------------------------------------------------------------
// d(c) curves

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Convexity {
    Convex,
    Concave,
    Indeterminate,
}

impl Convexity {
    pub fn label(self) -> &'static str {
        match self {
            Convexity::Convex => "convex",
            Convexity::Concave => "concave",
            Convexity::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DcCurve {
    pub c_samples: Vec<f64>,
    pub m1_values: Vec<f64>,
    pub d_values: Vec<f64>,
    pub d_prime: Vec<f64>,
    pub d_prime_from_m: Vec<f64>,
    pub d_second: Vec<f64>,
    pub noise_floor: Vec<f64>,
    pub classes: Vec<Convexity>,
}

impl DcCurve {
    pub const COLUMNS: [&'static str; 7] = ["c", "m1", "d", "d1", "d1_from_M", "d2", "class"];

    /// `c` values bracketing each change between `Concave` and `Convex` (ignoring
    /// `Indeterminate` samples in between), as midpoints.
    pub fn flips(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut last: Option<(f64, Convexity)> = None;
        for (&c, &k) in self.c_samples.iter().zip(&self.classes) {
            if k == Convexity::Indeterminate {
                continue;
            }
            if let Some((c0, k0)) = last {
                if k0 != k {
                    out.push(0.5 * (c0 + c));
                }
            }
            last = Some((c, k));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DcOptions {
    pub solver: SolverOptions,
    /// Half-width of the local stencil used for `d'` and `d''`.
    pub delta: f64,
    /// Estimated relative accuracy of a single `d` value.
    pub d_accuracy: f64,
    /// Parallel workers; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for DcOptions {
    fn default() -> Self {
        DcOptions { solver: SolverOptions::default(), delta: 1e-3, d_accuracy: 1e-12, workers: None }
    }
}

struct DcCell {
    m1: f64,
    d: f64,
    d1: f64,
    d1_m: f64,
    d2: f64,
    noise: f64,
    class: Convexity,
}

fn d_at(model: &PdeModel, c: f64, grid: &Grid, solver: &SolverOptions) -> Result<(TravelingWave, f64)> {
    let wave = solve_wave_fixed_point(model, c, grid, solver).map_err(|e| at_velocity(c, e))?;
    let d = dee_from_wave(&wave, model).map_err(|e| at_velocity(c, e))?;
    Ok((wave, d))
}

fn at_velocity(c: f64, e: Error) -> Error {
    match e {
        Error::AtVelocity { .. } => e,
        other => Error::AtVelocity { c, source: Box::new(other) },
    }
}

fn classify(d2: f64, noise: f64) -> Convexity {
    if d2 > noise {
        Convexity::Convex
    } else if d2 < -noise {
        Convexity::Concave
    } else {
        Convexity::Indeterminate
    }
}

fn dc_cell(model: &PdeModel, c: f64, grid: &Grid, opts: &DcOptions) -> Result<DcCell> {
    let (wave, d) = d_at(model, c, grid, &opts.solver)?;
    let m1 = m1_from_wave(&wave, model)?;
    let d1_m = -c * b_weighted_norm_sq(wave.profile(), model);
    let stencil = |h: f64| -> Result<(f64, f64, f64, f64)> {
        let dp = d_at(model, c + h, grid, &opts.solver)?.1;
        let dm = d_at(model, c - h, grid, &opts.solver)?.1;
        Ok((dp, dm, (dp - dm) / (2.0 * h), (dp - 2.0 * d + dm) / (h * h)))
    };
    let h = opts.delta;
    let (_, _, d1, d2) = stencil(h)?;
    let (_, _, _, d2_wide) = stencil(2.0 * h)?;
    let rounding = |h: f64| 4.0 * opts.d_accuracy * d.abs() / (h * h);
    // truncation error of the h-stencil is about a third of the h/2h gap
    let mut noise = 10.0 * ((d2 - d2_wide).abs() / 3.0 + rounding(h));
    let mut d2_best = d2;
    let mut class = classify(d2, noise);
    if class == Convexity::Indeterminate {
        let (_, _, _, d2_half) = stencil(0.5 * h)?;
        let rich = (4.0 * d2_half - d2) / 3.0;
        noise = 10.0 * ((rich - d2_half).abs() / 3.0 + rounding(0.5 * h));
        d2_best = rich;
        class = classify(rich, noise);
    }
    Ok(DcCell { m1, d, d1, d1_m, d2: d2_best, noise, class })
}

/// Solves the wave at every `c` and evaluates `d`, `d'`, `d''` and the convexity class.
///
/// The derivatives come from a local stencil `c ± δ, c ± 2δ` of extra solves
/// rather than from the (coarser) sample grid itself.
pub fn dc_curve(model: &PdeModel, c_grid: &[f64], grid: &Grid, opts: &DcOptions) -> Result<DcCurve> {
    for &c in c_grid {
        model.check_velocity(c).map_err(|e| at_velocity(c, e))?;
        for s in [-2.0, 2.0] {
            let cc = c + s * opts.delta;
            model.check_velocity(cc).map_err(|e| at_velocity(c, e))?;
        }
    }
    let run = || -> Vec<Result<DcCell>> { c_grid.par_iter().map(|&c| dc_cell(model, c, grid, opts)).collect() };
    let cells = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut curve = DcCurve {
        c_samples: c_grid.to_vec(),
        m1_values: vec![],
        d_values: vec![],
        d_prime: vec![],
        d_prime_from_m: vec![],
        d_second: vec![],
        noise_floor: vec![],
        classes: vec![],
    };
    for cell in cells {
        let cell = cell?;
        curve.m1_values.push(cell.m1);
        curve.d_values.push(cell.d);
        curve.d_prime.push(cell.d1);
        curve.d_prime_from_m.push(cell.d1_m);
        curve.d_second.push(cell.d2);
        curve.noise_floor.push(cell.noise);
        curve.classes.push(cell.class);
    }
    Ok(curve)
}

/// `c_min, c_min + step, …` up to `c_max` inclusive (within rounding).
pub fn c_grid(c_min: f64, c_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && c_max >= c_min) {
        return Err(Error::InvalidParameter(format!("bad c range [{c_min}, {c_max}] step {step}")));
    }
    let n = ((c_max - c_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| c_min + k as f64 * step).collect())
}

// ---------------------------------------------------------------------------
// blow-up data

#[derive(Clone, Debug)]
pub struct BlowupData {
    pub state: SystemState,
    /// `‖(v₀)_x - φ_c‖_{H^{s₀}}`.
    pub filter_distance: f64,
}

/// Largest `‖(v₀)_x - φ_c‖_{H^{s₀}} / ‖φ_c‖_{H^{s₀}}` accepted by [`build_blowup_data`].
pub const DEFAULT_FILTER_CAP: f64 = 0.1;

/// `U₀ = (λ(v₀)_x, -cλ(v₀)_x)` with `v̂₀ = φ̂_c/(iξ)` for `|ξ| ≥ h` and zero below.
pub fn build_blowup_data(wave: &TravelingWave, lambda: f64, h: f64, cap: f64) -> Result<BlowupData> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("filter cut h must be positive, got {h}")));
    }
    let phi = wave.profile();
    let grid = phi.grid();
    let mut spec = phi.spectrum();
    for (z, &k) in spec.iter_mut().zip(grid.wavenumbers()) {
        if k.abs() < h {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let filtered = GridFunction::from_spectrum(grid, &spec);
    let s0 = wave.model().s0();
    let filter_distance = sobolev_norm(&filtered.sub(phi)?, s0);
    let rel = filter_distance / sobolev_norm(phi, s0);
    if rel > cap {
        return Err(Error::InvalidParameter(format!(
            "filter cut h = {h} changes the profile by {rel:e} (relative), above the cap {cap:e}"
        )));
    }
    let c = wave.c();
    let state = SystemState::new(filtered.scaled(lambda), filtered.scaled(-c * lambda), 0.0)?;
    Ok(BlowupData { state, filter_distance })
}

/// `U₀ = (λφ_c, -cλφ_c)` without filtering.
pub fn scaled_wave_data(wave: &TravelingWave, lambda: f64) -> SystemState {
    SystemState::traveling(wave.profile(), wave.c()).scaled(lambda)
}

/// `-cM(U₀) > (2c²/(1-c²))·((p+1)/(p-1))·d(c)`.
pub fn momentum_condition(state: &SystemState, model: &PdeModel, c: f64, d_c: f64) -> Result<bool> {
    let r = FunctionalReport::evaluate(state, model, c)?;
    let p = model.p();
    Ok(-c * r.m > 2.0 * c * c / (1.0 - c * c) * (p + 1.0) / (p - 1.0) * d_c)
}

// ---------------------------------------------------------------------------
// Σ₋ observation along a run

/// `Σ₋(c)` and the `I_c` lower bound checked sample by sample.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub d_c: f64,
    pub initial: SigmaMinus,
    /// Leading samples whose `E + cM` stays within [`RESOLVED_DRIFT`] of its start.
    pub resolved_samples: usize,
    pub resolved_until: f64,
    /// `x_norm` at the end of the resolved prefix over its initial value.
    pub resolved_growth: f64,
    pub sigma_minus_resolved: bool,
    pub ic_bound_resolved: bool,
    /// Same checks over every recorded sample, resolved or not.
    pub sigma_minus_all: bool,
    pub ic_bound_all: bool,
    /// First recorded time at which `Σ₋` failed, if any.
    pub first_sigma_failure: Option<f64>,
}

fn sample_in_sigma(s: &Sample, c: f64, d_c: f64) -> SigmaMinus {
    SigmaMinus { energy_below: s.ecm(c) < d_c, virial_negative: 2.0 * s.ic(c) - s.q < 0.0 }
}

fn sample_ic_bound(s: &Sample, c: f64, d_c: f64, p: f64) -> bool {
    let ic = s.ic(c);
    2.0 * ic - s.q >= 0.0 || (p + 1.0) / (p - 1.0) * d_c < ic + IC_BOUND_SLACK
}

pub fn invariance_report(traj: &Trajectory, c: f64, d_c: f64) -> InvarianceReport {
    let series = traj.stable_series();
    let p = traj.model.p();
    let first = series.first().copied();
    let ecm0 = first.map(|s| s.ecm(c)).unwrap_or(0.0);
    let resolved_samples = series
        .iter()
        .take_while(|s| (s.ecm(c) - ecm0).abs() <= RESOLVED_DRIFT * ecm0.abs().max(1e-30))
        .count();
    let prefix = &series[..resolved_samples];
    let growth = match (prefix.first(), prefix.last()) {
        (Some(a), Some(b)) if a.x_norm > 0.0 => b.x_norm / a.x_norm,
        _ => 1.0,
    };
    let holds = |s: &Sample| sample_in_sigma(s, c, d_c).both();
    InvarianceReport {
        d_c,
        initial: first.map(|s| sample_in_sigma(&s, c, d_c)).unwrap_or(SigmaMinus {
            energy_below: false,
            virial_negative: false,
        }),
        resolved_samples,
        resolved_until: prefix.last().map(|s| s.t).unwrap_or(0.0),
        resolved_growth: growth,
        sigma_minus_resolved: prefix.iter().all(holds),
        ic_bound_resolved: prefix.iter().all(|s| sample_ic_bound(s, c, d_c, p)),
        sigma_minus_all: series.iter().all(holds),
        ic_bound_all: series.iter().all(|s| sample_ic_bound(s, c, d_c, p)),
        first_sigma_failure: series.iter().find(|s| !holds(s)).map(|s| s.t),
    }
}

// ---------------------------------------------------------------------------
// Levine functional

#[derive(Clone, Debug, Serialize)]
pub struct LevineSeries {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// `H H'' - ((p+3)/4)(H')²`.
    pub condition: Vec<f64>,
}

impl LevineSeries {
    /// Earliest time from which `H'' > 0` at every later sample, if any.
    pub fn positive_from(&self) -> Option<f64> {
        let last_bad = self.h2.iter().rposition(|&v| !(v > 0.0));
        match last_bad {
            None => self.t.first().copied(),
            Some(i) if i + 1 < self.t.len() => Some(self.t[i + 1]),
            _ => None,
        }
    }
}

/// `H = ½‖B^{-1/2}v‖²` with `v_x = u`, and its centered differences, over the
/// samples preceding any blow-up. Interior samples only.
pub fn levine_monitor(traj: &Trajectory) -> Result<LevineSeries> {
    let s = traj.stable_series();
    if s.iter().any(|v| v.h.is_nan()) {
        let mean = traj.snapshots.first().map(|u| u.u.mean()).unwrap_or(f64::NAN);
        return Err(Error::NonzeroMean(mean));
    }
    let p = traj.model.p();
    let mut out = LevineSeries { t: vec![], h: vec![], h1: vec![], h2: vec![], condition: vec![] };
    for k in 1..s.len().saturating_sub(1) {
        let dt_m = s[k].t - s[k - 1].t;
        let dt_p = s[k + 1].t - s[k].t;
        let (hm, h0, hp) = (s[k - 1].h, s[k].h, s[k + 1].h);
        let h1 = (hp - hm) / (dt_p + dt_m);
        let h2 = 2.0 * (dt_m * hp - (dt_m + dt_p) * h0 + dt_p * hm) / (dt_m * dt_p * (dt_m + dt_p));
        out.t.push(s[k].t);
        out.h.push(h0);
        out.h1.push(h1);
        out.h2.push(h2);
        out.condition.push(h0 * h2 - 0.25 * (p + 3.0) * h1 * h1);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// experiments

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum Perturbation {
    /// `(λφ_c, -cλφ_c)`.
    Scale { lambda: f64 },
    /// `(λ(v₀)_x, -cλ(v₀)_x)` with the low modes `|ξ| < h` removed.
    Filtered { lambda: f64, h: f64 },
    /// `Φ_c` plus seeded Gaussian bumps of size `epsilon` in `u`.
    Noise { epsilon: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum StabilityStatus {
    StayedClose { ratio: f64 },
    Departed { ratio: f64 },
    BlewUp { t_star: f64 },
}

#[derive(Clone, Debug)]
pub struct StabilityOptions {
    pub solver: SolverOptions,
    /// Time step; `0.5/R` from the nonlinear rate when unset.
    pub dt: Option<f64>,
    pub ratio_bound: f64,
    /// Steps between orbital-distance evaluations.
    pub distance_stride: usize,
    pub evolve: EvolveOptions,
    /// Distances below this fraction of `x_norm(Φ_c)` count as zero in the ratio.
    pub distance_floor: f64,
    pub filter_cap: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            solver: SolverOptions::default(),
            dt: None,
            ratio_bound: 10.0,
            distance_stride: 10,
            evolve: EvolveOptions::default(),
            distance_floor: 1e-8,
            filter_cap: DEFAULT_FILTER_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub model: PdeModel,
    pub c: f64,
    pub perturbation: Perturbation,
    pub t_end: f64,
    pub dt: f64,
    pub d_c: f64,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub status: StabilityStatus,
    pub distance_times: Vec<f64>,
    pub distances: Vec<f64>,
    pub invariance: InvarianceReport,
    pub drift_e: f64,
    pub drift_m: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

fn noise_data(wave: &TravelingWave, epsilon: f64, seed: u64) -> Result<SystemState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = wave.grid();
    let half = 0.25 * grid.length();
    let bumps: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-half..half), rng.gen_range(0.5..2.0)))
        .collect();
    let bump = GridFunction::from_fn(grid, |x| {
        bumps.iter().map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum()
    })?;
    let scale = epsilon / bump.sup_norm().max(f64::MIN_POSITIVE);
    let base = SystemState::traveling(wave.profile(), wave.c());
    SystemState::new(base.u.axpy(scale, &bump)?, base.w, 0.0)
}

/// Evolves perturbed traveling-wave data and tracks the orbital distance.
pub fn stability_experiment(
    model: &PdeModel,
    c: f64,
    perturbation: &Perturbation,
    t_end: f64,
    grid: &Grid,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let wave = solve_wave_fixed_point(model, c, grid, &opts.solver)?;
    stability_from_wave(&wave, perturbation, t_end, opts)
}

/// As [`stability_experiment`] with a precomputed wave.
pub fn stability_from_wave(
    wave: &TravelingWave,
    perturbation: &Perturbation,
    t_end: f64,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let model = wave.model();
    let c = wave.c();
    let d_c = dee_from_wave(wave, model)?;
    let u0 = match *perturbation {
        Perturbation::Scale { lambda } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
            }
            scaled_wave_data(wave, lambda)
        }
        Perturbation::Filtered { lambda, h } => build_blowup_data(wave, lambda, h, opts.filter_cap)?.state,
        Perturbation::Noise { epsilon, seed } => noise_data(wave, epsilon, seed)?,
    };
    let dt = match opts.dt {
        Some(dt) => dt,
        None => step_bounds(model, &u0.u).0.min(t_end.max(1e-3)),
    };
    let stride = opts.distance_stride.max(1);
    let evolve_opts = EvolveOptions { snapshot_stride: stride, ..opts.evolve.clone() };
    let traj = evolve(&u0, model, dt, t_end, &evolve_opts)?;

    let mut distance_times = Vec::with_capacity(traj.snapshots.len());
    let mut distances = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        distance_times.push(s.t);
        distances.push(orbital_distance(s, wave, model)?);
    }
    let initial_distance = distances[0];
    let max_distance = distances.iter().cloned().fold(initial_distance, f64::max);
    let scale = crate::functionals::x_norm(&SystemState::traveling(wave.profile(), c), model);
    let floor = opts.distance_floor * scale;
    let ratio = max_distance.max(floor) / initial_distance.max(floor);
    let status = match traj.status {
        RunStatus::BlewUp { t_star } => StabilityStatus::BlewUp { t_star },
        RunStatus::Aborted { ref reason } => return Err(Error::Config(format!("run aborted: {reason}"))),
        RunStatus::Completed if ratio <= opts.ratio_bound => StabilityStatus::StayedClose { ratio },
        RunStatus::Completed => StabilityStatus::Departed { ratio },
    };
    let invariance = invariance_report(&traj, c, d_c);
    let (drift_e, drift_m) = crate::evolution::conserved_drift(&traj);
    Ok(StabilityReport {
        model: model.clone(),
        c,
        perturbation: perturbation.clone(),
        t_end,
        dt: traj.dt,
        d_c,
        initial_distance,
        max_distance,
        status,
        distance_times,
        distances,
        invariance,
        drift_e,
        drift_m,
        trajectory: traj,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub c: f64,
    pub lambda: f64,
    pub h: f64,
    pub d_c: f64,
    pub filter_distance: f64,
    pub initial_ecm: f64,
    pub initial_virial: f64,
    pub momentum_condition: Option<bool>,
    pub status: RunStatus,
    pub dt: f64,
    pub invariance: InvarianceReport,
    pub levine_positive_from: Option<f64>,
    #[serde(skip)]
    pub levine: Option<LevineSeries>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Builds the filtered λ-data, refuses it unless it lies in `Σ₋(c)`, then runs it.
pub fn blowup_experiment(
    wave: &TravelingWave,
    lambda: f64,
    h: f64,
    dt: f64,
    t_end: f64,
    opts: &StabilityOptions,
) -> Result<BlowupReport> {
    let model = wave.model();
    let c = wave.c();
    let d_c = dee_from_wave(wave, model)?;
    let data = build_blowup_data(wave, lambda, h, opts.filter_cap)?;
    let r = FunctionalReport::evaluate(&data.state, model, c)?;
    let sigma = r.sigma_minus(d_c);
    if !sigma.both() {
        return Err(Error::Hypothesis(format!(
            "initial data not in the blow-up set: E + cM - d(c) = {:e}, 2I_c - Q = {:e}",
            r.ecm - d_c,
            2.0 * r.ic - r.q
        )));
    }
    let momentum = if c != 0.0 { Some(momentum_condition(&data.state, model, c, d_c)?) } else { None };
    let traj = evolve(&data.state, model, dt, t_end, &opts.evolve)?;
    let invariance = invariance_report(&traj, c, d_c);
    let levine = levine_monitor(&traj).ok();
    Ok(BlowupReport {
        c,
        lambda,
        h,
        d_c,
        filter_distance: data.filter_distance,
        initial_ecm: r.ecm,
        initial_virial: 2.0 * r.ic - r.q,
        momentum_condition: momentum,
        status: traj.status.clone(),
        dt: traj.dt,
        invariance,
        levine_positive_from: levine.as_ref().and_then(|l| l.positive_from()),
        levine,
        trajectory: traj,
    })
}

/// One cell of a `(c, λ)` sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub lambda: f64,
    pub status: String,
    pub ratio: f64,
    pub t_star: f64,
    pub d: f64,
    pub m1: f64,
}

/// Runs [`stability_experiment`] over every `(c, λ)` pair in parallel; rows come
/// back in input order.
pub fn stability_sweep(
    model: &PdeModel,
    cells: &[(f64, f64)],
    t_end: f64,
    grid: &Grid,
    opts: &StabilityOptions,
    workers: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let one = |&(c, lambda): &(f64, f64)| -> Result<SweepRow> {
        let wave = solve_wave_fixed_point(model, c, grid, &opts.solver).map_err(|e| at_velocity(c, e))?;
        let m1 = m1_from_wave(&wave, model)?;
        let rep = stability_from_wave(&wave, &Perturbation::Scale { lambda }, t_end, opts)
            .map_err(|e| at_velocity(c, e))?;
        let (status, ratio, t_star) = match rep.status {
            StabilityStatus::StayedClose { ratio } => ("StayedClose", ratio, f64::NAN),
            StabilityStatus::Departed { ratio } => ("Departed", ratio, f64::NAN),
            StabilityStatus::BlewUp { t_star } => ("BlewUp", f64::NAN, t_star),
        };
        Ok(SweepRow { c, lambda, status: status.into(), ratio, t_star, d: rep.d_c, m1 })
    };
    let run = || cells.par_iter().map(one).collect::<Vec<_>>();
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    rows.into_iter().collect()
}
