use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_glueheat"));
    c.env_remove("GLUEHEAT_THREADS");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("glueheat-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn constants_prints_bubble_norms() {
    let out = run(&["constants"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pi3 = std::f64::consts::PI.powi(3);
    let u = v["u_l2sq"].as_f64().unwrap();
    assert!((u / (13824.0 * pi3 / 6.0) - 1.0).abs() < 1e-8);
    assert!(v["ratio_table"].as_array().unwrap().len() >= 2);
    assert!((v["gamma0"].as_f64().unwrap() - 0.281_748_473).abs() < 1e-8);
}

#[test]
fn zero_amplitude_gives_zero_mu_column() {
    let dir = scratch("mod0");
    let out = run(&["modulation", "--A", "0", "--horizon", "1e4", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("modulation_A0.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t", "lambda0", "mu", "lambda", "sigma", "rho", "beta_t", "ortho_residual"]);
    let col = header.iter().position(|h| *h == "mu").unwrap();
    for l in lines {
        assert_eq!(l.split(',').nth(col).unwrap().parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn identical_runs_write_identical_bytes() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        let out = run(&["modulation", "--A", "-0.05", "--horizon", "1e5", "--out", d.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let name = "modulation_A-0.05.csv";
    assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["modulation", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["modulation", "--A", "0.3"]).status.code(), Some(3));
    assert_eq!(run(&["modulation", "--t0", "10"]).status.code(), Some(3));
    assert_eq!(run(&["modulation", "--a", "0.2"]).status.code(), Some(3));
    assert_eq!(run(&["modulation", "--R", "bogus"]).status.code(), Some(3));
    assert_eq!(run(&["modulation", "--lambda-init=-1", "--horizon", "1e4"]).status.code(), Some(3));
    assert_eq!(run(&["residual", "--horizon", "1e5"]).status.code(), Some(3));
    let bad = bin().env("GLUEHEAT_THREADS", "zero").arg("constants").output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# sweep\nA = 0.01, 0.02\nformat = json\n").unwrap();
    let out = run(&["profile", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.join("profile_A0.01.json").exists() && dir.join("profile_A0.02.json").exists());
    let out = run(&["profile", "--config", cfg.to_str().unwrap(), "--A", "0.03", "--format", "csv", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.join("profile_A0.03.csv").exists());
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(&["profile", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn residual_summary_schema() {
    let dir = scratch("res");
    let out = run(&["residual", "--A", "-0.05", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("residual_summary.json")).unwrap()).unwrap();
    for row in v.as_array().unwrap() {
        for key in ["name", "fitted_C", "uniformity", "pass"] {
            assert!(row.get(key).is_some(), "{key}");
        }
    }
    let csv = std::fs::read_to_string(dir.join("residual_tilcEpw_C2_A-0.05.csv")).unwrap();
    assert!(csv.starts_with("t,r,lhs,rhs,ratio\n"));
}

#[test]
fn verify_all_passes_for_log_rate() {
    let dir = scratch("verify");
    let out = bin().env("GLUEHEAT_THREADS", "4").args(["verify-all", "--A", "0.05", "--R", "log", "--out", dir.to_str().unwrap()]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("verify_all.json")).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["criteria"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
