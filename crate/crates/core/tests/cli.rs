use std::path::Path;
use std::process::{Command, Output};

fn nwlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nwlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NONLOCAL_WAVE_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn column(path: &Path, idx: usize) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn exact_boussinesq_peak_is_sqrt_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["exact", "--set", "wave.c=0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let phi = column(&dir.path().join("exact/profile.csv"), 1);
    let peak = phi.iter().cloned().fold(f64::MIN, f64::max);
    assert!((peak - 2f64.sqrt()).abs() <= 1e-12, "{peak}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("exact/manifest.json")).unwrap()).unwrap();
    assert!(manifest["version"].as_str().unwrap().contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(manifest["config"]["grid"]["n"], 1024);
}

#[test]
fn inadmissible_velocity_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["wave", "--set", "wave.c=1.2"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("velocity outside admissible range"));
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["wave", "--set", "wave.speed=0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["wave", "--set", "wave.c=0.5", "--set", "wave.max_iter=1", "--set", "wave.tol=1e-14"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dc_curve_flips_near_half_for_quadratic_boussinesq() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(
        dir.path(),
        &[
            "dc",
            "--set",
            r#"model={"l":{"prefactor":1,"factors":[{"a":1,"e":1}]},"b":{"prefactor":1},"p":2,"sigma":-1}"#,
            "--set",
            "grid.n=4096",
            "--set",
            "grid.length=320",
            "--set",
            "dc.c_min=0",
            "--set",
            "dc.c_max=0.95",
            "--set",
            "dc.c_step=0.05",
            "--workers",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("dc/dc_curve.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["c", "m1", "d", "d1", "d1_from_M", "d2", "class"]);
    let rows: Vec<(f64, String)> =
        r.records().map(|rec| rec.unwrap()).map(|rec| (rec[0].parse().unwrap(), rec[6].to_string())).collect();
    let first_convex = rows.iter().find(|(_, k)| k == "convex").unwrap().0;
    let last_concave = rows.iter().filter(|(_, k)| k == "concave").last().unwrap().0;
    assert!(last_concave < 0.5 && first_convex > 0.5 && first_convex - last_concave <= 0.1 + 1e-9);
}

#[test]
fn evolve_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve", "--set", "wave.c=0.5", "--set", "evolve.t_end=1", "--set", "evolve.snapshot_stride=10"];
    for d in [&a, &b] {
        let o = nwlab(d.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["evolve/diagnostics.csv", "evolve/snapshots/snapshot_00001.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("evolve/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["result"]["status"]["kind"], "Completed");
}

#[test]
fn environment_sets_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nwlab"))
        .args(["exact", "--set", "grid.n=128", "--set", "grid.length=64"])
        .env("NONLOCAL_WAVE_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("exact/profile.csv").exists());
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"grid": {"n": 256, "length": 64}, "wave": {"c": 0.2}}"#).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_nwlab"))
        .args(["wave", "--config"])
        .arg(&cfg)
        .args(["--set", "wave.c=0.3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("wave/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["wave"]["c"], 0.3);
    assert_eq!(m["config"]["grid"]["n"], 256);
}

const KLEIN_GORDON: &str = r#"model={"l":{"prefactor":1},"b":{"prefactor":1,"factors":[{"a":1,"e":-1}]},"p":3,"sigma":-1}"#;

#[test]
fn stability_sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(
        dir.path(),
        &["stability", "--set", KLEIN_GORDON, "--set", "stability.sweep=[[0.8,1.01],[0.7,1.01]]", "--set", "stability.t_end=2"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("stability/sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0].len(), 16);
    assert_eq!(&rows[0][3], "StayedClose");
}

#[test]
fn stability_run_writes_report_and_distances() {
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["stability", "--set", KLEIN_GORDON, "--set", "stability.t_end=2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stability/report.json")).unwrap()).unwrap();
    assert_eq!(rep["status"]["kind"], "StayedClose");
    assert!(!column(&dir.path().join("stability/distance.csv"), 1).is_empty());
}

#[test]
fn blowup_refuses_an_overly_strong_filter() {
    // on the default box the low-mode filter moves λΦ₀ too far
    let dir = tempfile::tempdir().unwrap();
    let o = nwlab(dir.path(), &["blowup"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("filter cut"), "{err}");
}
