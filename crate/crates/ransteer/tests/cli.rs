use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ransteer"))
}

#[test]
fn seed_is_mandatory() {
    let out = bin().args(["run", "--iterations", "5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn run_writes_counts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--seed", "1", "--iterations", "30", "--mode", "split", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let counts = std::fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 31);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["command"], "run");
    assert!(manifest["files"]["counts.csv"].is_string());
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\"nope\": 1}").unwrap();
    let out = bin().args(["attack", "--seed", "1", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}
