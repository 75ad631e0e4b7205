//! End-to-end runs of the `twinphoton` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinphoton"))
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn code(out: &Path, args: &[&str]) -> i32 {
    run(out, args).status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn stack_flags_resonance_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["stack"]);
    ok(b.path(), &["stack"]);
    let bytes = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["reflectance.csv", "field_profile.csv", "reflectance.meta.json"] {
        assert_eq!(bytes(a.path(), f), bytes(b.path(), f), "{f}");
    }
    let text = String::from_utf8(bytes(a.path(), "reflectance.csv")).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("lambda_nm,reflectance,transmittance,resonance\n"));
    let flagged: Vec<f64> = rows(&a.path().join("reflectance.csv"))
        .iter()
        .filter(|r| r[3] == "1")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert_eq!(flagged.len(), 1);
    assert!((flagged[0] - 760.0).abs() < 5.0, "{flagged:?}");
    let meta = json(&a.path().join("reflectance.meta.json"));
    let report = json(&a.path().join("run_report.json"));
    assert_eq!(meta["config_hash"], report["config_hash"]);
}

#[test]
fn input_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(d.path(), &["--set", "regions=[]", "stack"]), 2);
    assert_eq!(code(d.path(), &["--set", "no_such_key=1", "stack"]), 2);
    assert_eq!(code(d.path(), &["--config", "/nonexistent/config.json", "stack"]), 2);
    assert_eq!(code(d.path(), &["--set", "regions.0.layers.0.medium.x=1.5", "stack"]), 2);
    assert_eq!(code(d.path(), &["--format", "xml", "stack"]), 2);
}

#[test]
fn config_file_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("device.json");
    std::fs::write(&cfg, r#"{"tuning": {"theta_step_deg": 0.5}, "seed": 9}"#).unwrap();
    ok(d.path(), &["--config", cfg.to_str().unwrap(), "tuning"]);
    let r = rows(&d.path().join("tuning.csv"));
    // 11 angles plus one degeneracy row per interaction.
    assert_eq!(r.len(), 2 * 12);
    assert_eq!(json(&d.path().join("tuning.meta.json"))["seed"], 9);
}

#[test]
fn tuning_has_four_branches_and_flagged_degeneracy() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["tuning"]);
    let r = rows(&d.path().join("tuning.csv"));
    for inter in ["1", "2"] {
        let branch: Vec<_> = r.iter().filter(|x| x[0] == inter).collect();
        assert_eq!(branch.len(), 102);
        let deg: Vec<_> = branch.iter().filter(|x| x[6] == "1").collect();
        assert_eq!(deg.len(), 1);
        let (s, i): (f64, f64) = (deg[0][2].parse().unwrap(), deg[0][3].parse().unwrap());
        assert!((s - 1520.0).abs() < 1e-6 && (i - 1520.0).abs() < 1e-6);
    }
    let before = std::fs::read(d.path().join("tuning.csv")).unwrap();
    ok(d.path(), &["tuning"]);
    assert_eq!(before, std::fs::read(d.path().join("tuning.csv")).unwrap());
}

#[test]
fn spectrum_json_format_and_peaks() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--format", "json", "spectrum"]);
    let data = json(&d.path().join("spectrum.json"));
    let first = &data.as_array().unwrap()[0];
    assert!(first["lambda_nm"].is_f64() && first["intensity"].is_f64());
    let peaks = json(&d.path().join("spectrum.meta.json"))["meta"]["peaks"].as_array().unwrap().len();
    assert_eq!(peaks, 4);
}

#[test]
fn hom_round_trip_and_errors() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--seed", "7", "hom", "simulate"]);
    let scan = d.path().join("hom_scan.csv");
    let first = std::fs::read(&scan).unwrap();
    ok(d.path(), &["--seed", "7", "hom", "simulate"]);
    assert_eq!(first, std::fs::read(&scan).unwrap());
    ok(d.path(), &["--seed", "8", "hom", "simulate"]);
    assert_ne!(first, std::fs::read(&scan).unwrap());

    std::fs::write(&scan, &first).unwrap();
    ok(d.path(), &["hom", "fit", "--input", scan.to_str().unwrap()]);
    let fit = json(&d.path().join("hom_fit.json"));
    assert_eq!(fit["converged"], true);
    assert!((fit["visibility"].as_f64().unwrap() - 0.847).abs() < 0.1);
    assert!((fit["delta_lambda_nm"].as_f64().unwrap() - 0.53).abs() < 0.15);

    let bad = d.path().join("bad.csv");
    std::fs::write(&bad, "delta_z_mm,total_counts,accidental_counts\n0.0,12,abc\n").unwrap();
    assert_eq!(code(d.path(), &["hom", "fit", "--input", bad.to_str().unwrap()]), 2);
    std::fs::write(&bad, "z,counts\n0.0,12\n").unwrap();
    assert_eq!(code(d.path(), &["hom", "fit", "--input", bad.to_str().unwrap()]), 2);

    let mut flat = String::from("delta_z_mm,total_counts,accidental_counts\n");
    for k in 0..25 {
        flat.push_str(&format!("{},500,90\n", -6.0 + 0.5 * k as f64));
    }
    std::fs::write(&bad, flat).unwrap();
    assert_eq!(code(d.path(), &["hom", "fit", "--input", bad.to_str().unwrap()]), 3);
}

#[test]
fn enhancement_reports_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["enhancement"]);
    let e = json(&d.path().join("enhancement.json"));
    assert!(e["enhancement_factor"].as_f64().unwrap() > 1.0);
    assert!(e["count_budget"]["singles_hz"].as_f64().unwrap() > 0.0);

    let hand = [
        "--set", "cavity_override.n=3", "--set", "cavity_override.finesse=100",
        "--set", "cavity_override.t_up=0.02", "--set", "cavity_override.t_down=0.02",
    ];
    ok(d.path(), &[&hand[..], &["enhancement"]].concat());
    let f = json(&d.path().join("enhancement.json"))["enhancement_factor"].as_f64().unwrap();
    assert!((f - 3200.0 / (9.0 * std::f64::consts::PI)).abs() < 1e-9);
    let mut doubled = hand.to_vec();
    doubled[3] = "cavity_override.finesse=200";
    ok(d.path(), &[&doubled[..], &["enhancement"]].concat());
    let f2 = json(&d.path().join("enhancement.json"))["enhancement_factor"].as_f64().unwrap();
    assert!((f2 / f - 2.0).abs() < 1e-12);

    assert_eq!(code(d.path(), &["--set", "stack_scan.resonance_window_nm=[765,775]", "enhancement"]), 3);
}
