use std::path::Path;
use std::process::{Command, Output};

fn hoqmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoqmc")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn points_of_the_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.json");
    std::fs::write(&file, r#"{"b": 2, "m": 2, "s": 1, "alpha": 2, "P": 7, "q": [1, 1]}"#).unwrap();
    let out = hoqmc(&["points", path(&file), "--exact"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "0/16");
    assert!(lines.contains(&"3/16"));
    let out = hoqmc(&["points", path(&file), "--count", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap().parse::<f64>().unwrap(), 0.0);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn construct_verify_and_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.json");
    let out = hoqmc(&["construct", "--m", "6", "--s", "3", "--p", "0.6", "--weights", "product", "--out", path(&file)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(!text.contains("wall_time"));
    assert!(hoqmc(&["verify", "--vector", path(&file)]).status.success());

    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let q1 = json["q"][1].as_u64().unwrap();
    json["q"][1] = (if q1 == 1 { 2 } else { 1 }).into();
    std::fs::write(&file, json.to_string()).unwrap();
    let out = hoqmc(&["verify", "--vector", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn timing_flag_records_wall_time() {
    let out = hoqmc(&["construct", "--m", "4", "--s", "2", "--p", "0.6", "--timing"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("wall_time"));
}

#[test]
fn bound_from_vector_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.json");
    let args = ["--m", "5", "--s", "2", "--p", "0.7", "--beta-c", "0.2"];
    let mut construct = vec!["construct"];
    construct.extend(args);
    construct.extend(["--out", path(&file)]);
    assert!(hoqmc(&construct).status.success());
    let from_file = hoqmc(&["bound", "--vector", path(&file), "--format", "json"]);
    let mut bound = vec!["bound", "--format", "json"];
    bound.extend(args);
    let from_flags = hoqmc(&bound);
    assert!(from_file.status.success() && from_flags.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
    let report: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(report["lambdas"].as_array().unwrap().len(), 51);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"m": 4, "s": 2, "p": 0.6, "alpha": 3}"#).unwrap();
    let out = hoqmc(&["construct", "--config", path(&config), "--m", "5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((v["m"].as_u64(), v["alpha"].as_u64()), (Some(5), Some(3)));
    assert_eq!(v["q"].as_array().unwrap().len(), 6);
}

#[test]
fn converge_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let out = hoqmc(&[
        "converge", "--integrand", "product", "--m-min", "3", "--m-max", "8", "--s", "3", "--p", "0.6", "--out",
        path(&prefix),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.starts_with("m,N,error,bound"));
    assert_eq!(csv.lines().count(), 7);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert!(json.get("slope").is_some());
}

#[test]
fn exit_codes() {
    assert_eq!(hoqmc(&["nonsense"]).status.code(), Some(1));
    assert_eq!(hoqmc(&["construct", "--s", "2", "--p", "0.6"]).status.code(), Some(1));
    assert_eq!(hoqmc(&["--help"]).status.code(), Some(0));
    let out = hoqmc(&["construct", "--m", "30", "--s", "2", "--p", "0.6"]);
    assert_eq!(out.status.code(), Some(3));
    let out = hoqmc(&["construct", "--m", "4", "--s", "70", "--p", "0.6", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn smallness_warning_at_p_one() {
    let out = hoqmc(&["construct", "--m", "4", "--s", "2", "--p", "1", "--beta-c", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
