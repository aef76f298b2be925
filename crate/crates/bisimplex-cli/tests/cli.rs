use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisimplex")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn lattice_info_reports_angles() {
    let o = run(&["lattice-info", "--lambda=-0.3333333333333333"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["simplices"], 384);
    let min = v["dihedral_3d"]["min_angle"].as_f64().unwrap();
    assert!((min - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    let o = run(&["lattice-info", "--lambda", "0"]);
    let a = json(&o)["dihedral_3d"]["a4_23_1"].as_f64().unwrap();
    assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn invalid_lambda_exits_two() {
    let o = run(&["lattice-info", "--lambda", "0.99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["lattice-info", "--lambda", "1.5"]).status.code(), Some(2));
}

#[test]
fn onshell_verify_suite() {
    for rep in ["su2", "so3"] {
        let o = run(&["onshell-verify", "--rep", rep]);
        assert!(o.status.success(), "{rep}");
        let v = json(&o);
        let reports = v["reports"].as_array().unwrap();
        assert_eq!(reports.len(), 24);
        assert!(reports.iter().all(|r| r["gap"].as_f64().unwrap() < 1e-8));
    }
    let o = run(&["onshell-verify", "--force-signs=-1,1,1,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn suppression_curve_csv() {
    let o = run(&["suppression-curve", "--gamma", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "v2,re_n0,im_n0,closed_re,closed_im,rel_err");
    let rows: Vec<&&str> = lines[1..].iter().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 50);
    for r in &rows {
        let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f.len(), 6);
        assert!(f[5] < 1e-6);
    }
    let summary: Value = serde_json::from_str(lines.last().unwrap().trim_start_matches("# ")).unwrap();
    let s = summary["slopes"]["so3"]["spacelike"].as_f64().unwrap();
    assert!((s + 0.5).abs() < 0.05);
    let o = run(&["suppression-curve", "--gamma", "2", "--kind", "timelike", "--rep", "so3", "--points", "5"]);
    let text = stdout(&o);
    let summary: Value = serde_json::from_str(text.lines().last().unwrap().trim_start_matches("# ")).unwrap();
    let s = summary["slopes"]["so3"]["timelike"].as_f64().unwrap();
    assert!((s + 0.25).abs() < 0.025);
}

#[test]
fn degenerate_n_is_deterministic() {
    let args = ["degenerate-n", "--samples", "4000", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    for k in ["mean_re", "mean_im", "stderr", "n", "seed"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["n"], 4000);
    assert_eq!(v["seed"], 7);
}

#[test]
fn config_file_and_flag_override() {
    let path = std::env::temp_dir().join(format!("bisimplex-cli-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"samples": 3000, "seed": 5, "gamma": 2.0}"#).unwrap();
    let p = path.to_str().unwrap();
    let v = json(&run(&["degenerate-n", "--config", p]));
    assert_eq!(v["n"], 3000);
    assert_eq!(v["seed"], 5);
    let v = json(&run(&["degenerate-n", "--config", p, "--seed", "6"]));
    assert_eq!(v["seed"], 6);
    std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(run(&["selftest", "--config", p]).status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn output_file_is_written() {
    let path = std::env::temp_dir().join(format!("bisimplex-cli-out-{}.json", std::process::id()));
    let o = run(&["lattice-info", "--output", path.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["triangles"], 800);
    std::fs::remove_file(&path).ok();
}

#[test]
fn selftest_modes() {
    let o = run(&["selftest"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    let o = run(&["selftest", "--tolerance", "1e-20", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
}

#[test]
fn invalid_inputs_exit_two() {
    assert_eq!(run(&["degenerate-n", "--gamma", "0"]).status.code(), Some(2));
    assert_eq!(run(&["degenerate-n", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(run(&["onshell-verify", "--force-signs", "1,2"]).status.code(), Some(2));
}
