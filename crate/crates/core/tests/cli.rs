//! The `ecgsq` binary.

use std::process::Command;

fn ecgsq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecgsq"))
}

fn header() -> String {
    ecgsq::corpus::bundled_header().display().to_string()
}

#[test]
fn roundtrip_reports_metrics() {
    let out = ecgsq()
        .args(["roundtrip", "--schema", "inlc", "--param", "20", "--dur-s", "5", "--records", &header()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cr ") && text.contains("prd "), "{text}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("od.csv");
    let status = ecgsq()
        .args(["sweep", "--schema", "od", "--params", "0.1,0.3", "--dur-s", "10", "--records", &header()])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], ecgsq::bench::CSV_VERSION_LINE);
    assert_eq!(lines[1], ecgsq::bench::CSV_HEADER);
    // Two records rows, then two averages.
    assert_eq!(lines.len(), 6);
    assert!(lines[4].starts_with("AVERAGE,od,"));
}

#[test]
fn gsvq_sweep_without_codebook_fails() {
    let out = ecgsq()
        .args(["sweep", "--schema", "gsvq", "--records", &header()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("codebook"));
}

#[test]
fn train_then_sweep_gsvq() {
    let dir = tempfile::tempdir().unwrap();
    let cb = dir.path().join("cb.gscb");
    let st = ecgsq()
        .args(["train-codebook", "--size", "8", "--records", &header()])
        .arg("--out")
        .arg(&cb)
        .status()
        .unwrap();
    assert!(st.success());
    let out = ecgsq()
        .args(["sweep", "--schema", "gsvq", "--params", "0.1", "--dur-s", "10", "--records", &header()])
        .arg("--codebook")
        .arg(&cb)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",gsvq,-,0.1,"));
}

#[test]
fn bad_bank_policy_is_rejected() {
    let out = ecgsq()
        .args(["roundtrip", "--schema", "inlc", "--param", "5", "--bank", "sometimes", "--records", &header()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
