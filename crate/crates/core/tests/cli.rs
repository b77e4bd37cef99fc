use std::fs;
use std::path::Path;
use std::process::Command;

use riesz_lab::cli::{run, THREADS_ENV};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("riesz-lab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_owned()).collect()
}

#[test]
#[allow(clippy::approx_constant)]
fn constants_for_the_line() {
    let (code, out, _) = call(&["constants", "--n", "1,2"]);
    assert_eq!(code, 0);
    let dc: f64 = column(&out, "dimensional_constant")[0].parse().unwrap();
    assert!((dc - 0.63662).abs() < 5e-6);
    let v: Vec<f64> = column(&out, "single_mass_level_volume").iter().map(|s| s.parse().unwrap()).collect();
    assert!((v[1] - 1.0 / std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn hilbert_exact_on_a_dirac() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"n":1,"masses":[{"a":1.0,"c":[0.0]}]}"#);
    let (code, out, err) = call(&["hilbert-exact", "--measure", &m, "--lambda", "1"]);
    assert_eq!(code, 0, "{err}");
    for total in column(&out, "total") {
        let t: f64 = total.parse().unwrap();
        assert!((t - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    }
    assert_eq!(column(&out, "method").len(), 2);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "u.json", r#"{"n":2,"level":0,"cells":[]}"#);
    let (code, _, err) = call(&["whitney", "--set", &empty, "--max-depth", "3"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let m = write(dir.path(), "m.json", r#"{"n":2,"masses":[{"a":1.0,"c":[0.0,0.0]}]}"#);
    let (code, _, _) = call(&["levelset", "--kernel", "riesz:1", "--measure", &m, "--lambda", "1"]);
    assert_eq!(code, 2, "missing --seed");
    let (code, _, _) = call(&["levelset", "--kernel", "riesz:1", "--measure", &m, "--lambda", "-1", "--seed", "1"]);
    assert_eq!(code, 2);
    let bad = write(dir.path(), "bad.json", r#"{"n":1,"masses":[{"a":-1.0,"c":[0.0]}]}"#);
    let (code, _, _) = call(&["hilbert-exact", "--measure", &bad, "--lambda", "1"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["constants", "--n", "1", "--threads", "0"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["verify-kernel", "--kernel", "riesz:3", "--n", "2", "--seed", "1"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn help_goes_to_stdout() {
    let (code, out, err) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("search") && out.contains("cancellation"));
    assert!(err.is_empty());
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("c.csv");
    let (code, out, _) = call(&["constants", "--n", "3", "--out", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let (_, direct, _) = call(&["constants", "--n", "3"]);
    assert_eq!(fs::read_to_string(target).unwrap(), direct);
}

#[test]
fn search_configuration_replays_through_weaktype() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("best.json");
    let (code, out, err) = call(&[
        "search", "--kernel", "riesz:1", "--n", "2", "--masses", "2", "--max-evals", "20", "--restarts", "2",
        "--samples", "5000", "--seed", "4", "--config-out", config.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let value = column(&out, "value")[0].clone();
    let (code, replay, err) = call(&[
        "weaktype", "--kernel", "riesz:1", "--measure", config.to_str().unwrap(), "--lambda", "1",
        "--samples", "5000", "--seed", "4",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(column(&replay, "value")[0], value);
}

#[test]
fn threads_do_not_change_results() {
    let args = ["sweep", "--kernel", "riesz:1", "--dims", "1,2", "--masses", "1,2", "--max-evals", "10",
        "--restarts", "2", "--samples", "2000", "--seed", "9"];
    let runs: Vec<String> = ["1", "3"]
        .iter()
        .map(|t| {
            let mut a = args.to_vec();
            a.extend(["--threads", t]);
            let (code, out, err) = call(&a);
            assert_eq!(code, 0, "{err}");
            out
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].lines().count(), 5);
}

#[test]
fn binary_honours_thread_variable() {
    let exe = env!("CARGO_BIN_EXE_riesz-lab");
    let ok = Command::new(exe).args(["constants", "--n", "2"]).env(THREADS_ENV, "2").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(exe).args(["constants", "--n", "2"]).env(THREADS_ENV, "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains(THREADS_ENV));
    let overridden = Command::new(exe)
        .args(["constants", "--n", "2", "--threads", "1"])
        .env(THREADS_ENV, "many")
        .output()
        .unwrap();
    assert_eq!(overridden.status.code(), Some(0));
}

#[test]
fn json_commands_emit_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "u.json", r#"{"n":2,"level":0,"cells":[[0,0],[1,0]]}"#);
    let (code, out, _) = call(&["whitney", "--set", &set, "--max-depth", "4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["set_measure"], 2.0);
    let grid = write(
        dir.path(),
        "g.json",
        r#"{"n":1,"L":1,"box":{"origin":[0],"shape":[4]},"values":[0.5,3.0,3.0,0.2]}"#,
    );
    let (code, out, err) = call(&["cz", "--grid", &grid, "--lambda", "1", "--max-depth", "5"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["report"].as_object().unwrap().values().all(|b| b == true));
}
