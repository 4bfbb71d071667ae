use std::path::Path;
use std::process::{Command, Output};

fn qngc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qngc")).args(args).env("QNGC_OUTPUT_DIR", dir).output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn exit_codes_for_help_and_bad_usage() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qngc(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(qngc(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(qngc(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(qngc(&["sweep"], dir.path()).status.code(), Some(1));
    let bad = qngc(&["verdict", "--criterion", "qng-spad", "--ps", "1.2", "--pe1", "0"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = qngc(&["verdict", "--criterion", "qng-spad", "--ps", "0.25", "--pe1", "0", "--pe2", "0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes"], true);
    assert_eq!(v["criterion"], "qng-spad");
    for c in ["ncl", "qng-spad", "qng-pnrd", "sm-qng"] {
        let out = qngc(&["verdict", "--criterion", c, "--ps", "0", "--pe1", "0"], dir.path());
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["passes"], false, "{c}");
    }
}

#[test]
fn threshold_curves_start_at_the_origin_and_rise() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qngc(&["thresholds", "--detection", "spad"], dir.path()).status.code(), Some(0));
    let text = read(&dir.path().join("thresholds-spad.csv"));
    assert!(text.starts_with("# {"));
    assert_eq!(text.lines().nth(1), Some("curve,p_e,p_s"));
    let all = rows(&text);
    for curve in ["qng-spad", "ncl", "tms"] {
        let pts: Vec<(f64, f64)> =
            all.iter().filter(|r| r[0] == curve).map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap())).collect();
        assert_eq!(pts[0], (0.0, 0.0), "{curve}");
        assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1), "{curve}");
    }
    for r in all.iter().filter(|r| r[0] == "tms") {
        let (pe, ps): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((ps - qngc_threshold(pe)).abs() < 1e-9);
    }
}

fn qngc_threshold(pe: f64) -> f64 {
    0.5 * (pe / (8.0 + pe)).sqrt() * (2.0 + pe + (pe * (8.0 + pe)).sqrt())
}

#[test]
fn campaigns_reproduce_from_their_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = qngc(&["montecarlo", "--detection", "pnrd", "--samples", "1e3", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("montecarlo-pnrd.csv");
    let text = read(&csv);
    assert_eq!(rows(&text).len(), 500);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("montecarlo-pnrd.json"))).unwrap();
    assert_eq!(summary["violations"].as_array().map(Vec::len), Some(0));
    assert!(summary["min_gap"].as_f64().unwrap() >= -1e-9);

    let again = dir.path().join("again.csv");
    let out = qngc(&["replay", csv.to_str().unwrap(), "--output", again.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(&again), text);
}

#[test]
fn sweeps_leave_out_points_that_never_pass() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--criterion", "sm-qng", "--kind", "transmission-over-noise", "--fixed", "0", "--points", "5"];
    assert_eq!(qngc(&args, dir.path()).status.code(), Some(0));
    assert!(rows(&read(&dir.path().join("sweep-sm-qng.csv"))).is_empty());

    let plain = dir.path().join("plain.csv");
    let heralded = dir.path().join("heralded.csv");
    for (c, path) in [("sm-qng", &plain), ("sm-qng-heralded", &heralded)] {
        let args = [
            "sweep", "--criterion", c, "--kind", "transmission-over-noise", "--fixed", "1", "--points", "8",
            "--output", path.to_str().unwrap(),
        ];
        assert_eq!(qngc(&args, dir.path()).status.code(), Some(0));
    }
    let (a, b) = (rows(&read(&plain)), rows(&read(&heralded)));
    assert_eq!(a.len(), 8);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], y[0]);
        assert!((x[1].parse::<f64>().unwrap() - y[1].parse::<f64>().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn sweep_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--criterion", "qng-pnrd", "--fixed", "0.5", "--points", "6"];
    assert_eq!(qngc(&args, dir.path()).status.code(), Some(0));
    let first = dir.path().join("sweep-qng-pnrd.csv");
    let again = dir.path().join("again.csv");
    qngc(&["replay", first.to_str().unwrap(), "--output", again.to_str().unwrap()], dir.path());
    assert_eq!(read(&first), read(&again));
}
