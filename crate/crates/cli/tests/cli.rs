use std::path::Path;
use std::process::{Command, Output};

use sdm_cli::manifest::verify_manifest;
use sdm_core::wigner::PhaseSpaceGrid;

fn sdm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SDM_THREADS", "2")
        .output()
        .expect("sdm runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn cats_example_writes_a_three_peak_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "cats", "--atoms", "2", "--detect", "none", "--xi", "3.14159", "--grid=-8:8:161"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = PhaseSpaceGrid::from_csv(&read(&dir.path().join("wigner_m2.csv"))).unwrap();
    assert_eq!((grid.spec.x.n, grid.spec.y.n), (161, 161));
    // Re α = 0 column
    let w: Vec<f64> = (0..161).map(|iy| grid.real_at(80, iy)).collect();
    let peaks = (1..160).filter(|&i| w[i] > w[i - 1] && w[i] > w[i + 1]).count();
    assert_eq!(peaks, 3);
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn detected_cats_write_one_grid_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "cats", "--atoms", "2", "--detect", "all", "--xi", "1", "--grid=-3:3:31"], dir.path());
    assert!(out.status.success());
    let records = read(&dir.path().join("records.csv"));
    let mut total = 0.0;
    for line in records.lines().skip(1) {
        let (label, p) = line.split_once(',').unwrap();
        total += p.parse::<f64>().unwrap();
        assert!(dir.path().join(format!("wigner_{label}.csv")).exists());
    }
    assert!((total - 1.0).abs() < 1e-12);
    let ee = PhaseSpaceGrid::from_csv(&read(&dir.path().join("wigner_ee.csv"))).unwrap();
    assert!(ee.min_real() < -0.1);
}

#[test]
fn config_file_and_flags_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = sdm(
        &["-q", "evolve", "--nex", "3", "--xi", "0.8", "--times", "0,0.5", "--grid=-3:3:21", "--grid-im=-5:5:31"],
        a.path(),
    );
    assert!(out.status.success());
    let cfg = format!(
        r#"{{
  "params": {{"xi_mag": 0.8, "n_ex": 3, "nbar": 0.1, "gamma": 1}},
  "scenario": {{"kind": "evolve", "times": [0, 0.5], "grid": "-3:3:21", "grid_im": "-5:5:31"}},
  "out": {:?}
}}"#,
        b.path().display().to_string()
    );
    let cfg_path = b.path().join("run.json");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sdm"))
        .args(["-q", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["wigner_t0.csv", "wigner_t0.5.csv", "moments.csv", "manifest.json"] {
        assert_eq!(read(&a.path().join(name)), read(&b.path().join(name)), "{name}");
    }
}

#[test]
fn bad_config_exits_with_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(
        &cfg_path,
        "{\n  \"params\": {\"xi_mag\": 0.5, \"n_ex\": 2, \"nbar\": 0.1},\n  \"scenario\": {\"kind\": \"stats\", \"orcale\": true}\n}\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sdm"))
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    // scenario objects are buffered, so the position is where the object closes
    assert!(err.contains("orcale") && err.contains("line 4"), "{err}");

    let out = sdm(&["stats", "--nbar", "-0.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_prints_json_with_both_noise_measures() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "stats"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["mean_n"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    let q = v["mandel_q"].as_f64().unwrap();
    assert!((v["fano_f"].as_f64().unwrap() - q - 1.0).abs() < 1e-12);
    assert_eq!(v["params"]["n_ex"].as_f64(), Some(2.0));
    assert_eq!(read(&dir.path().join("stats.json")).trim(), String::from_utf8_lossy(&out.stdout).trim());
}

#[test]
fn correlations_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "correlations", "--times", "0:2:5"], dir.path());
    assert!(out.status.success());
    let csv = read(&dir.path().join("correlations.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,G_ee,G_eg,G_ge,G_gg"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[1] - 1.1017855).abs() < 1e-6);
    assert!((first[2] - 0.6505971).abs() < 1e-6);
    assert!((first[4] - 2.1994087).abs() < 1e-6);
    let side: serde_json::Value = serde_json::from_str(&read(&dir.path().join("correlations.json"))).unwrap();
    let forms = side["printed_forms"].as_array().unwrap();
    assert_eq!(forms.len(), 8);
    assert!(forms.iter().any(|f| f["rate_a"] == 2.0));
}

#[test]
fn correlations_without_coupling_write_nan() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "correlations", "--xi", "0", "--times", "0,1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("correlations.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap(), 1.0);
    assert!(row[2..].iter().all(|v| *v == "NaN"));
}

#[test]
fn phase_and_steady_fock_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "phase"], dir.path());
    assert!(out.status.success());
    let phase = read(&dir.path().join("phase.csv"));
    assert_eq!(phase.lines().next(), Some("theta,p"));
    assert_eq!(phase.lines().count(), 257);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("phase.json"))).unwrap();
    assert_eq!(summary["maxima"].as_array().unwrap().len(), 2);
    assert!(read(&dir.path().join("rho.csv")).starts_with("m,n,re,im\n"));
    assert!(verify_manifest(dir.path()).unwrap().is_empty());

    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "steady", "--fock", "--grid=-3:3:31", "--grid-im=-4:4:41"], dir.path());
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_str(&read(&dir.path().join("stats.json"))).unwrap();
    let oracle = stats["oracle"]["mean_n"].as_f64().unwrap();
    assert!((oracle - 0.6).abs() < 1e-6);
}

#[test]
fn validate_passes_at_desk_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdm(&["-q", "validate", "--nex", "2", "--xi", "0.5", "--nbar", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(!table.contains("FAIL"));
    assert!(table.contains("printed form A=2γ G_gg"));
}

#[test]
fn manifest_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sdm(&["-q", "cats", "--grid=-2:2:11"], dir.path()).status.success());
    std::fs::write(dir.path().join("wigner_m1.csv"), "tampered").unwrap();
    assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["wigner_m1.csv".to_string()]);
}
