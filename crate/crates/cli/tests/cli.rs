use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathweight")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn spectral_table_has_gamma_row() {
    let o = run(&["spectral-table", "--n", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,theta_k,r_k,beta_k_sq,lambda_k_over_delta3");
    assert_eq!(lines.len(), 1 + 15 + 1);
    let last: Vec<&str> = lines[16].split(',').collect();
    assert_eq!((last[0], last[2]), ("16", "na"));
    let gamma: f64 = last[1].parse().unwrap();
    assert!((-2.0..-1.5).contains(&gamma));
    let meta: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["quadrature_order"], 20);
}

#[test]
fn tau_convergence_json() {
    let o = run(&["tau-convergence", "--n", "64,256,1024", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let errs: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["abs_err"].as_f64().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn flat_sanity_emits_one_passing_row() {
    let o = run(&["flat-sanity", "--samples", "300"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let err: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(err <= 1e-10);
}

#[test]
fn density_mc_reports_target() {
    let o = run(&["density-mc", "--model", "hyperbolic:2:-1", "--n", "4", "--samples", "500", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..4], ["density-mc/constant-one", "hyperbolic:2:-1", "4", "500"]);
    let target: f64 = row[6].parse().unwrap();
    assert!((target - 1.24044483580).abs() < 1e-10);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["density-mc", "--model", "hyperbolic:2:1", "--n", "4", "--samples", "3"]).status.code(), Some(3));
    assert_eq!(run(&["density-mc", "--n", "4", "--samples", "3"]).status.code(), Some(2));
    assert_eq!(run(&["tau-convergence"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["spectral-table", "--n", "8", "--out", "/nonexistent-dir/t.csv"]).status.code(), Some(4));
    assert_eq!(run(&["flat-sanity", "--model", "hyperbolic:2:-1"]).status.code(), Some(2));
}

#[test]
fn config_file_is_merged() {
    let dir = std::env::temp_dir().join(format!("pathweight-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"command": "tau-convergence", "n": [64, 128]}"#).unwrap();
    let o = run(&["tau-convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
    std::fs::write(&cfg, r#"{"model": "constant:2:1", "n": 4, "samples": 2}"#).unwrap();
    assert_eq!(run(&["density-mc", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    std::fs::write(&cfg, r#"{"n": 4, "colour": "blue"}"#).unwrap();
    assert_eq!(run(&["tau-convergence", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
