use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cat0fubini")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn tripod_command_passes() {
    let o = bin(&["tripod"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("E_y(E(f^y))"), "{text}");
}

#[test]
fn tripod_json_is_valid() {
    let o = bin(&["tripod", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn verify_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = bin(&[
        "verify",
        &scenario("tripod.json"),
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v.is_object());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("suite,kind,name,value,tolerance,instances,worst_instance,worst_seed,status\n"));
    assert!(table.contains("maps,value,f.defect,0.5,"), "{table}");
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(bin(&["verify", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(bin(&["verify", &scenario("tripod.json"), "--suite", "bogus"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"version": 1, "suites": ["maps"], "extra": 0}"#).unwrap();
    let o = bin(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn spectral_on_bundled_graph() {
    let o = bin(&["spectral", &scenario("c4.json"), "--dim", "2", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gap: 2"));
}

#[test]
fn concentration_small_run() {
    let o = bin(&["concentration", "--n-max", "2", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("n,target,"));
}
