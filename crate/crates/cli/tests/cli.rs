use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
family = "oscillator3d"
alpha = 1.0
beta = [1.0, 2.0, 3.0]
k = ["3/2", "5/3"]
suites = ["involution", "geometry"]
seed = 3

[sampling]
points = 20
geometry_points = 4

[trajectory]
t_max = 2.0
rel_tol = 1e-10
abs_tol = 1e-10
n_trajectories = 1
"#;

fn superint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superint")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CONFIG);
    let out_path = dir.path().join("report.json");
    let out = superint(&["verify", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert!(report["suites"]["involution"]["pass"].as_bool().unwrap());
    assert!(report["suites"]["geometry"]["pass"].as_bool().unwrap());
    assert!(report["version"].is_string());
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CONFIG);
    let traj = dir.path().join("traj");
    let out = superint(&[
        "verify",
        &cfg,
        "--seed",
        "11",
        "--suite",
        "conservation",
        "--traj-dir",
        traj.to_str().unwrap(),
        "--tol-scale",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["config"]["tolerances"]["drift_tol"], 2e-6);
    let suites = report["suites"].as_object().unwrap();
    assert_eq!(suites.keys().collect::<Vec<_>>(), ["conservation"]);
    assert!(traj.join("trajectory_0.csv").exists());
}

#[test]
fn failing_suite_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CONFIG}\n[perturbation]\nbeta_index = 1\ndelta = 0.5\n");
    let cfg = write_config(dir.path(), "broken.toml", &text);
    let out = superint(&["verify", &cfg, "--suite", "involution"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn bad_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &CONFIG.replace("\"3/2\"", "\"4/2\""));
    let out = superint(&["verify", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lowest terms") && err.contains("line 5"), "{err}");
    let out = superint(&["verify", &cfg, "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn families_lists_arities() {
    let out = superint(&["families"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = |name: &str| -> Vec<String> {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap()
            .split_whitespace()
            .map(String::from)
            .collect()
    };
    assert_eq!(row("oscillator3d"), ["oscillator3d", "3", "3", "2"]);
    assert_eq!(row("kepler-coulomb3d"), ["kepler-coulomb3d", "3", "3", "2"]);
    assert_eq!(row("four-d-example"), ["four-d-example", "4", "4", "3"]);
}

#[test]
fn trajectory_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CONFIG);
    let out = superint(&["trajectory", &cfg, "--x0", "1.0,0.5,0.3,0.1,-0.2,0.4", "--tmax", "1.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,q1,q2,q3,p1,p2,p3,L1,L2,L3");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 10));
    assert_eq!(rows[0][..7], [0.0, 1.0, 0.5, 0.3, 0.1, -0.2, 0.4]);
    assert_eq!(rows.last().unwrap()[0], 1.5);
    let h0 = rows[0][7];
    assert!(rows.iter().all(|r| (r[7] - h0).abs() <= 1e-8 * h0.abs()));

    let out = superint(&["trajectory", &cfg, "--x0", "1.0,0.5", "--tmax", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
