use std::path::Path;
use std::process::{Command, Output};

fn mmac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmac"))
        .args(args)
        .current_dir(dir)
        .env_remove("MMAC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn scheme_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scheme", "--snr-db", "-5,0", "--alpha-n-max", "3", "--out", "o"];
    assert_eq!(code(&mmac(&args, dir.path())), 0);
    let first = std::fs::read(dir.path().join("o/scheme_-5dB.csv")).unwrap();
    assert_eq!(code(&mmac(&args, dir.path())), 0);
    let second = std::fs::read(dir.path().join("o/scheme_-5dB.csv")).unwrap();
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    // Header plus 3 values of n, 2 schemes, 2 orders.
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("alpha,n,scheme,order,r1_bits,r2_bits,sum_bits,csum_bits\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn capacity_prints_and_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = mmac(&["capacity", "--snr-db", "0", "--out", "o"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/capacity.csv")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), csv);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert_eq!(row[1], "3.7320520733");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/capacity.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["element_count"], 64);
    assert_eq!(json["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mmac"))
        .args(["scheme", "--snr-db", "0", "--alpha-n-max", "1"])
        .current_dir(dir.path())
        .env("MMAC_OUT_DIR", dir.path().join("from_env"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from_env/scheme_0dB.csv").exists());
}

#[test]
fn bad_configuration_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mmac(&["region", "--mu1-grid", "0.7", "--out", "o"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.json"), r#"{"snr_db": [0], "no_such_key": 1}"#).unwrap();
    assert_eq!(code(&mmac(&["capacity", "--config", "bad.json"], dir.path())), 2);
    std::fs::write(dir.path().join("empty.json"), r#"{"snr_db": []}"#).unwrap();
    assert_eq!(code(&mmac(&["capacity", "--config", "empty.json"], dir.path())), 2);
    assert_eq!(code(&mmac(&["scheme", "--config", "missing.json"], dir.path())), 2);
}

#[test]
fn empty_weight_grid_gives_the_corner_hull() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"mu1_grid": [], "alpha_n_max": 2}"#).unwrap();
    let o = mmac(&["region", "--config", "c.json", "--snr-db", "0", "--constraint", "unit", "--out", "o"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/region_unit_0dB.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.first(), Some(&"corner_A"));
    assert_eq!(labels.last(), Some(&"corner_C"));
    assert!(labels.contains(&"corner_B"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/region_unit_0dB.json")).unwrap()).unwrap();
    assert!(json["bc_points"].as_array().unwrap().is_empty());
}

#[test]
fn strict_mode_fails_on_an_uncertified_point() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"solver": {"max_points": 1, "multistarts": 1}}"#).unwrap();
    let base = ["distributions", "--config", "c.json", "--snr-db", "5", "--constraint", "unit", "--mu1-grid", "0.3", "--out", "o"];
    let o = mmac(&base, dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/distribution_unit_5dB_mu0.3.json")).unwrap()).unwrap();
    assert_eq!(json["point"]["converged"], false);
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(code(&mmac(&strict, dir.path())), 3);
}
