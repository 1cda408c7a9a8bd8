use std::path::Path;
use std::process::{Command, Output};

use spectrolimit::record::CSV_COLUMNS;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectrolimit"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_rows(file: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(file).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

fn column(header: &[String], rows: &[csv::StringRecord], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn sweep_writes_pinned_schema_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = cli(&[
        "sweep",
        "--axis",
        "rate:log:1e-4:1e-2:2",
        "--axis2",
        "detuning:lin:20:40:2",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_rows(&out);
    assert_eq!(header, CSV_COLUMNS);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[13] == "ok"));
}

#[test]
fn detuning_sweep_has_even_absorption_and_odd_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("det.csv");
    let o = cli(&[
        "sweep",
        "--axis",
        "detuning:lin:-60:60:13",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    let (header, rows) = read_rows(&out);
    let sp = column(&header, &rows, "s_plus_m2");
    let sm = column(&header, &rows, "s_minus_m2");
    let n = sp.len();
    for k in 0..n {
        assert!((sp[k] - sp[n - 1 - k]).abs() <= 1e-6 * sp[k]);
        assert!((sm[k] + sm[n - 1 - k]).abs() <= 1e-6 * sp[n / 2]);
    }
}

#[test]
fn rate_sweep_turns_over() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rate.csv");
    let o = cli(&[
        "sweep",
        "--axis",
        "rate:log:1e-6:1e2:17",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    let (header, rows) = read_rows(&out);
    let s = column(&header, &rows, "sens_full");
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < s[0] && min < s[s.len() - 1]);
}

#[test]
fn sweep_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let axis = ["sweep", "--axis", "density:log:1e16:1e18:3"];
    let o = cli(&axis);
    assert!(o.status.success());
    let f = cli(&[&axis[..], &["--out", path(&out)]].concat());
    assert!(f.status.success());
    assert_eq!(o.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn both_routes_write_companion_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("both.csv");
    let o = cli(&[
        "--route",
        "both",
        "sweep",
        "--axis",
        "detuning:lin:0:40:3",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success());
    let (_, full) = read_rows(&out);
    let (_, adiabatic) = read_rows(&dir.path().join("both.adiabatic.csv"));
    assert_eq!(full.len(), 3);
    assert_eq!(adiabatic.len(), 3);
}

#[test]
fn point_with_both_routes_reports_deviation() {
    let o = cli(&["--route", "both", "point"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["full"]["route"], "full");
    assert_eq!(v["adiabatic"]["route"], "adiabatic");
    let dev = v["relative_deviation"]["s_plus_m2"].as_f64().unwrap();
    assert!(dev.abs() < 0.02);
    assert_eq!(v["full"]["regime"], "CL");
}

#[test]
fn point_with_monte_carlo() {
    let o = cli(&["--seed", "3", "point", "--mc-trajectories", "2000"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mc = &v["telegraph_mc"];
    assert_eq!(mc["trajectories"], 2000);
    assert_eq!(mc["seed"], 3);
    let got = mc["chemical_diffusion"][0][0].as_f64().unwrap();
    let want = mc["analytic"][0][0].as_f64().unwrap();
    let se = mc["standard_error"][0][0].as_f64().unwrap();
    assert!((got - want).abs() <= 4.0 * se);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"molecule": {"detuning_a_mhz": 0.0}}"#).unwrap();
    let o = cli(&["--config", path(&cfg), "point"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["detuning_mhz"], 0.0);
    assert!(v["s_minus_m2"].as_f64().unwrap().abs() < 1e-30);

    let o = cli(&[
        "--config",
        path(&cfg),
        "--set",
        "sample.thickness_m=0.002",
        "point",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["thickness_m"], 0.002);
}

#[test]
fn dark_molecule_is_a_compute_error() {
    let o = cli(&["--set", "molecule.dipole_a_debye=0", "point"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["status"], "error");
    assert_eq!(e["kind"], "DegenerateAbsorption");
}

#[test]
fn failed_sweep_points_keep_their_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dark.csv");
    let o = cli(&[
        "--set",
        "molecule.dipole_a_debye=0",
        "sweep",
        "--axis",
        "rate:log:1e-4:1e-2:3",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "PartialFailure");
    let (_, rows) = read_rows(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| &r[13] == "DegenerateAbsorption"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["figures", "fig9"][..],
        &["sweep", "--axis", "speed:lin:0:1:3"],
        &["sweep", "--axis", "rate:log:0:1:3"],
        &["--set", "laser.power_mw=1", "point"],
        &["--route", "both", "sweep", "--axis", "rate:lin:1:2:2"],
    ] {
        let o = cli(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_config_file_is_reported() {
    let o = cli(&["--config", "/nonexistent/c.json", "point"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "ConfigError");
}

#[test]
fn figure_packs() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["figures", "fig2", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csvs.len(), 5);

    let o = cli(&["figures", "fig1c", "--out", path(dir.path())]);
    assert!(o.status.success());
    let (header, rows) = read_rows(&dir.path().join("fig1c.csv"));
    assert_eq!(rows.len(), 33);
    for name in ["sens_full", "sens_intensity", "sens_phase", "sens_psn"] {
        assert!(column(&header, &rows, name).iter().all(|x| *x > 0.0));
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let axis = ["sweep", "--axis", "rate:log:1e-6:1e2:9"];
    let one = cli(&[&["--workers", "1"][..], &axis].concat());
    let many = cli(&[&["--workers", "4"][..], &axis].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
}
