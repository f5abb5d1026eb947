//! Run configuration, output directories and the command drivers behind the
//! `nwlab` binary.
//!
//! A run is described by one JSON document ([`RunConfig`]); `--set a.b=v`
//! overrides are applied to the JSON tree before it is validated, so an override
//! naming an unknown key fails exactly like a bad config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{evolve, step_bounds, EvolveOptions, RunStatus, Sample, Trajectory};
use crate::functionals::SystemState;
use crate::model::PdeModel;
use crate::spectral::{Grid, GridFunction};
use crate::stability::{
    blowup_experiment, c_grid, dc_curve, stability_from_wave, stability_sweep, DcCurve, DcOptions, Perturbation,
    StabilityOptions,
};
use crate::waves::{exact_wave, solve_wave_fixed_point, SolverOptions, TravelingWave};

/// Overrides the default output root when neither `--out` nor `output_dir` is given.
pub const OUT_ENV: &str = "NONLOCAL_WAVE_LAB_OUT";
const DEFAULT_OUT: &str = "runs";

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 1024, length: 80.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WaveConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        WaveConfig { c: 0.0, tol: s.tol, max_iter: s.max_iter }
    }
}

/// Evolution of `λ·(φ_c, -cφ_c)` with `c` from the wave block.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// `None`: half the nonlinear stability scale of the initial data.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub lambda: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: None, t_end: 10.0, snapshot_stride: 100, lambda: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub c_step: f64,
}

impl Default for DcConfig {
    fn default() -> Self {
        DcConfig { c_min: 0.0, c_max: 0.9, c_step: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub c: f64,
    pub lambda: f64,
    /// Low-mode cutoff; when set the data are the filtered construction.
    pub h: Option<f64>,
    /// Seeded noise amplitude; takes precedence over `lambda`/`h`.
    pub noise: Option<f64>,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub ratio_bound: f64,
    /// `(c, λ)` cells; when present the command runs a sweep instead.
    pub sweep: Option<Vec<(f64, f64)>>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            c: 0.8,
            lambda: 1.01,
            h: None,
            noise: None,
            t_end: 50.0,
            dt: None,
            ratio_bound: 10.0,
            sweep: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupConfig {
    pub c: f64,
    pub lambda: f64,
    /// Defaults to the first nonzero wavenumber of the grid.
    pub h: Option<f64>,
    pub t_end: f64,
    pub dt: Option<f64>,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig { c: 0.0, lambda: 1.05, h: None, t_end: 20.0, dt: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: PdeModel,
    pub grid: GridConfig,
    pub wave: WaveConfig,
    pub evolve: EvolveConfig,
    pub dc: DcConfig,
    pub stability: StabilityConfig,
    pub blowup: BlowupConfig,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: PdeModel::boussinesq(3.0).expect("Boussinesq p=3 is admissible"),
            grid: GridConfig::default(),
            wave: WaveConfig::default(),
            evolve: EvolveConfig::default(),
            dc: DcConfig::default(),
            stability: StabilityConfig::default(),
            blowup: BlowupConfig::default(),
            output_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses a config document (or the defaults when `text` is `None`) and
    /// applies `key=value` overrides. Values are read as JSON when they parse,
    /// as plain strings otherwise.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut tree = match text {
            Some(t) => serde_json::from_str(t).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?,
            None => serde_json::to_value(RunConfig::default())?,
        };
        for o in overrides {
            let (path, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut tree, path, value)?;
        }
        let cfg: RunConfig = serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))?;
        cfg.grid()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::load(Some(&text), overrides)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.length)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.wave.tol, max_iter: self.wave.max_iter, ..SolverOptions::default() }
    }
}

fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    let mut node = tree;
    for k in &keys[..keys.len() - 1] {
        if node.get(*k).map_or(true, |v| !v.is_object()) {
            if !node.is_object() {
                return Err(Error::Config(format!("override path `{path}` crosses a non-object")));
            }
            node[*k] = json!({});
        }
        node = &mut node[*k];
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(format!("override path `{path}` crosses a non-object"))),
    }
}

/// Resolves the output root: `--out`, then `output_dir`, then the environment,
/// then `./runs`. Each command writes into `<root>/<command>`.
pub fn output_root(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn num_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Short stable fingerprint of a model, for sweep rows.
pub fn model_hash(model: &PdeModel) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(model)?);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// Execution context of one command.
pub struct Run {
    pub command: &'static str,
    pub config: RunConfig,
    pub dir: PathBuf,
    pub workers: Option<usize>,
}

impl Run {
    pub fn new(command: &'static str, config: RunConfig, root: &Path, workers: Option<usize>) -> Result<Self> {
        let dir = root.join(command);
        fs::create_dir_all(&dir)?;
        Ok(Run { command, config, dir, workers })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn manifest(&self, outputs: &[&str], result: Value) -> Result<()> {
        let m = json!({
            "command": self.command,
            "version": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
            "config": self.config,
            "outputs": outputs,
            "result": result,
        });
        write_json(&self.path("manifest.json"), &m)
    }
}

fn write_profile(path: &Path, wave: &TravelingWave) -> Result<()> {
    let x = wave.grid().points();
    let rows = x.iter().zip(wave.profile().values()).map(|(&x, &v)| num_row(&[x, v]));
    write_csv(path, &["x", "phi"], rows)
}

fn write_series(path: &Path, series: &[Sample]) -> Result<()> {
    let rows = series.iter().map(|s| num_row(&[s.t, s.e, s.m, s.x_norm, s.sup_norm]));
    write_csv(path, &["t", "E", "M", "x_norm", "sup_norm"], rows)
}

fn write_snapshots(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let x = s.u.grid().points();
        let rows = (0..x.len()).map(|j| num_row(&[x[j], s.u.values()[j], s.w.values()[j]]));
        write_csv(&dir.join(format!("snapshot_{k:05}.csv")), &["x", "u", "w"], rows)?;
    }
    Ok(())
}

fn status_json(status: &RunStatus) -> Value {
    serde_json::to_value(status).unwrap_or(Value::Null)
}

fn t_star(status: &RunStatus) -> Option<f64> {
    match status {
        RunStatus::BlewUp { t_star } => Some(*t_star),
        _ => None,
    }
}

/// Solves a traveling wave; writes `profile.csv` and `diagnostics.json`.
pub fn cmd_wave(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let wave = solve_wave_fixed_point(&cfg.model, cfg.wave.c, &cfg.grid()?, &cfg.solver())?;
    write_profile(&run.path("profile.csv"), &wave)?;
    write_json(&run.path("diagnostics.json"), wave.diagnostics())?;
    run.manifest(&["profile.csv", "diagnostics.json"], json!({ "c": wave.c(), "diagnostics": wave.diagnostics() }))
}

/// Closed-form wave of the model at `wave.c`, where one exists.
pub fn cmd_exact(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let wave = exact_wave(&cfg.model, cfg.wave.c, &cfg.grid()?)?;
    write_profile(&run.path("profile.csv"), &wave)?;
    write_json(&run.path("diagnostics.json"), wave.diagnostics())?;
    run.manifest(&["profile.csv", "diagnostics.json"], json!({ "c": wave.c(), "diagnostics": wave.diagnostics() }))
}

pub fn cmd_evolve(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let ev = &cfg.evolve;
    if !(ev.lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("evolve.lambda must be positive, got {}", ev.lambda)));
    }
    let grid = cfg.grid()?;
    let wave = solve_wave_fixed_point(&cfg.model, cfg.wave.c, &grid, &cfg.solver())?;
    let u0 = SystemState::traveling(wave.profile(), wave.c()).scaled(ev.lambda);
    let dt = ev.dt.unwrap_or_else(|| step_bounds(&cfg.model, &u0.u).0.min(ev.t_end.max(1e-3)));
    let opts = EvolveOptions { snapshot_stride: ev.snapshot_stride, ..EvolveOptions::default() };
    let traj = evolve(&u0, &cfg.model, dt, ev.t_end, &opts)?;
    write_series(&run.path("diagnostics.csv"), &traj.series)?;
    write_snapshots(&run.path("snapshots"), &traj)?;
    let (de, dm) = crate::evolution::conserved_drift(&traj);
    run.manifest(
        &["diagnostics.csv", "snapshots/"],
        json!({
            "model": cfg.model,
            "grid": cfg.grid,
            "dt": traj.dt,
            "t_end": ev.t_end,
            "status": status_json(&traj.status),
            "t_star": t_star(&traj.status),
            "drift_E": de,
            "drift_M": dm,
        }),
    )
}

fn dc_rows(curve: &DcCurve) -> Vec<Vec<String>> {
    (0..curve.c_samples.len())
        .map(|k| {
            let mut r = num_row(&[
                curve.c_samples[k],
                curve.m1_values[k],
                curve.d_values[k],
                curve.d_prime[k],
                curve.d_prime_from_m[k],
                curve.d_second[k],
            ]);
            r.push(curve.classes[k].label().to_string());
            r
        })
        .collect()
}

pub fn cmd_dc(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let cs = c_grid(cfg.dc.c_min, cfg.dc.c_max, cfg.dc.c_step)?;
    let opts = DcOptions { solver: cfg.solver(), workers: run.workers, ..DcOptions::default() };
    let curve = dc_curve(&cfg.model, &cs, &cfg.grid()?, &opts)?;
    write_csv(&run.path("dc_curve.csv"), &DcCurve::COLUMNS, dc_rows(&curve))?;
    run.manifest(&["dc_curve.csv"], json!({ "samples": cs.len(), "flips": curve.flips() }))
}

fn stability_options(cfg: &RunConfig, dt: Option<f64>) -> StabilityOptions {
    StabilityOptions {
        solver: cfg.solver(),
        dt,
        ratio_bound: cfg.stability.ratio_bound,
        evolve: EvolveOptions { snapshot_stride: 0, ..EvolveOptions::default() },
        ..StabilityOptions::default()
    }
}

/// One perturbed-wave run (report JSON + distance CSV), or a sweep when
/// `stability.sweep` lists cells.
pub fn cmd_stability(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let st = &cfg.stability;
    let grid = cfg.grid()?;
    let opts = stability_options(cfg, st.dt);
    if let Some(cells) = &st.sweep {
        let rows = stability_sweep(&cfg.model, cells, st.t_end, &grid, &opts, run.workers)?;
        let hash = model_hash(&cfg.model)?;
        let out = rows.iter().map(|r| {
            let mut v = vec![hash.clone()];
            v.extend(num_row(&[r.c, r.lambda]));
            v.push(r.status.clone());
            v.extend(num_row(&[r.ratio, r.t_star, r.d, r.m1]));
            v
        });
        write_csv(&run.path("sweep.csv"), &["model", "c", "lambda", "status", "ratio", "t_star", "d", "m1"], out)?;
        return run.manifest(&["sweep.csv"], json!({ "cells": cells.len() }));
    }
    let perturbation = match (st.noise, st.h) {
        (Some(epsilon), _) => Perturbation::Noise { epsilon, seed: cfg.seed },
        (None, Some(h)) => Perturbation::Filtered { lambda: st.lambda, h },
        (None, None) => Perturbation::Scale { lambda: st.lambda },
    };
    let wave = solve_wave_fixed_point(&cfg.model, st.c, &grid, &opts.solver)?;
    let rep = stability_from_wave(&wave, &perturbation, st.t_end, &opts)?;
    write_json(&run.path("report.json"), &rep)?;
    let rows = rep.distance_times.iter().zip(&rep.distances).map(|(&t, &d)| num_row(&[t, d]));
    write_csv(&run.path("distance.csv"), &["t", "distance"], rows)?;
    write_series(&run.path("diagnostics.csv"), &rep.trajectory.series)?;
    run.manifest(
        &["report.json", "distance.csv", "diagnostics.csv"],
        json!({ "status": rep.status, "initial_distance": rep.initial_distance, "max_distance": rep.max_distance }),
    )
}

/// Filtered λ-data; refused (exit 2) unless the data lie in the blow-up set.
pub fn cmd_blowup(run: &Run) -> Result<()> {
    let cfg = &run.config;
    let b = &cfg.blowup;
    let grid = cfg.grid()?;
    let h = b.h.unwrap_or_else(|| grid.first_nonzero_wavenumber());
    let mut opts = stability_options(cfg, b.dt);
    opts.evolve.snapshot_stride = 0;
    let wave = solve_wave_fixed_point(&cfg.model, b.c, &grid, &opts.solver)?;
    let dt = match b.dt {
        Some(dt) => dt,
        None => step_bounds(&cfg.model, &SystemState::traveling(wave.profile(), b.c).scaled(b.lambda).u).0,
    };
    let rep = blowup_experiment(&wave, b.lambda, h, dt, b.t_end, &opts)?;
    write_json(&run.path("report.json"), &rep)?;
    write_series(&run.path("diagnostics.csv"), &rep.trajectory.series)?;
    let mut outputs = vec!["report.json", "diagnostics.csv"];
    if let Some(lv) = &rep.levine {
        let rows = (0..lv.t.len()).map(|k| num_row(&[lv.t[k], lv.h[k], lv.h1[k], lv.h2[k], lv.condition[k]]));
        write_csv(&run.path("levine.csv"), &["t", "H", "H1", "H2", "condition"], rows)?;
        outputs.push("levine.csv");
    }
    run.manifest(
        &outputs,
        json!({ "status": rep.status, "t_star": t_star(&rep.status), "levine_positive_from": rep.levine_positive_from }),
    )
}

/// Machine-readable error document and the exit code for it: 2 for validation
/// failures, 3 for numerical ones.
pub fn error_report(e: &Error) -> (i32, Value) {
    let code = if e.is_validation() { 2 } else { 3 };
    (code, json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code }))
}

/// Profile as a grid function, for callers that want to re-read a written CSV.
pub fn read_profile(path: &Path, grid: &Grid) -> Result<GridFunction> {
    let mut r = csv::Reader::from_path(path)?;
    let mut v = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let s = rec.get(1).ok_or_else(|| Error::Config(format!("{}: missing column", path.display())))?;
        v.push(s.parse::<f64>().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
    }
    GridFunction::new(grid, v)
}
