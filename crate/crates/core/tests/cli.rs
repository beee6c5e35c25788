use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fem-accuracy"))
}

fn stdout(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn constant_defaults() {
    let out = stdout(&["constant"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let c: f64 = row.last().unwrap().parse().unwrap();
    assert!(c.is_finite() && c > 0.0);
}

#[test]
fn prob_curve_through_one_half() {
    let out = stdout(&["prob", "--ck1", "3", "--ck2", "3", "--k1", "1", "--k2", "2", "--hmin", "0.5", "--hmax", "2", "--steps", "3"]);
    assert!(out.lines().any(|l| l == "1.0,0.5"), "{out}");
}

#[test]
fn converge_table_order_three() {
    let out = stdout(&["converge", "--k", "2", "--m", "0", "--hmax", "0.125", "--hmin", "0.015625"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,m,p,h,error,bound,order_est");
    assert_eq!(lines.len(), 5);
    let order: f64 = lines[4].rsplit(',').next().unwrap().parse().unwrap();
    assert!((order - 3.0).abs() < 0.15);
}

#[test]
fn json_is_one_record_per_line() {
    let out = stdout(&["hstar-seq", "--qmax", "5", "--format", "json"]);
    assert_eq!(out.lines().count(), 5);
    for line in out.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["h_star"].as_f64().unwrap() > 0.0);
    }
    let bounds = stdout(&["bounds", "--format", "json"]);
    let first: serde_json::Value = serde_json::from_str(bounds.lines().next().unwrap()).unwrap();
    for key in ["bound_name", "inequality", "measured", "bound", "pass"] {
        assert!(first.get(key).is_some());
    }
}

#[test]
fn inadmissible_parameters_fail_with_the_structured_error() {
    let out = bin().args(["constant", "--n", "2", "--m", "1", "--k", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inadmissible parameters"));
}

#[test]
fn bad_flags_print_usage() {
    let out = bin().args(["constant", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn thread_cap_and_output_file() {
    let path = std::env::temp_dir().join(format!("fem-accuracy-{}.csv", std::process::id()));
    let status = bin()
        .env("FEM_ACCURACY_THREADS", "2")
        .args(["weakstar", "--qmax", "5", "--out", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("q,h_star,pairing,limit,error"));
    std::fs::remove_file(path).ok();
    let bad = bin().env("FEM_ACCURACY_THREADS", "zero").arg("constant").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
