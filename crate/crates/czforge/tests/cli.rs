//! End-to-end CLI checks on the fast spectrum scenario: exit codes, output
//! files, and the config-hash guard.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_czforge");

fn czforge(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("OPENBLAS_NUM_THREADS", "1")
        .output()
        .expect("spawn czforge")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn spectrum_config(out_dir: &Path) -> String {
    format!(
        r#"{{
  "device": {{
    "modes": {{
      "omega_1": 4.50, "omega_2": 4.25, "omega_c": 5.50,
      "alpha_1": -0.250, "alpha_2": 0.250, "alpha_c": -0.200,
      "g_12": 0.010, "g_1c": 0.100, "g_2c": 0.100
    }}
  }},
  "pulse": {{ "coupler_idle": 5.50 }},
  "scenario": {{ "name": "spectrum" }},
  "run": {{ "out_dir": {:?} }}
}}"#,
        out_dir.display().to_string()
    )
}

#[test]
fn missing_config_file_exits_3() {
    let out = czforge(&["spectrum", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read config"));
}

#[test]
fn unknown_scenario_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, spectrum_config(&dir.path().join("out"))).unwrap();
    let out = czforge(&["bogus", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn scenario_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, spectrum_config(&dir.path().join("out"))).unwrap();
    let out = czforge(&["sweep-hold", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));
}

#[test]
fn missing_required_arg_exits_3() {
    let out = czforge(&["spectrum"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn spectrum_run_succeeds_and_guards_stale_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, spectrum_config(&out_dir)).unwrap();

    let out = czforge(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["spectrum.idle.csv", "spectrum.work.csv", "spectrum.report.json"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
        assert!(stdout.contains(name), "stdout does not mention {name}");
    }

    // same config again: hashes agree, overwrite allowed
    let again = czforge(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&again), 0);

    // changed config against the same directory: refused without --force
    std::fs::write(&cfg, spectrum_config(&out_dir).replace("5.50", "5.51")).unwrap();
    let clash = czforge(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&clash), 1);
    assert!(String::from_utf8_lossy(&clash.stderr).contains("--force"));

    let forced = czforge(&["spectrum", "--config", cfg.to_str().unwrap(), "--force"]);
    assert_eq!(code(&forced), 0);
}

#[test]
fn out_override_redirects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, spectrum_config(&dir.path().join("ignored"))).unwrap();
    let actual = dir.path().join("actual");
    let out = czforge(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        actual.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(actual.join("spectrum.report.json").exists());
    assert!(!dir.path().join("ignored").exists());
}
