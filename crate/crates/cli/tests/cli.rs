use std::process::Command;

fn isa(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isa")).args(args).output().unwrap()
}

#[test]
fn non_power_of_two_size_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.txt");
    let o = isa(&["generate", "--m", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "problem = small\nstep_size = 3\n").unwrap();
    let o = isa(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step_size"));
}

#[test]
fn generated_instance_checks_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    let p = path.to_str().unwrap();
    assert!(isa(&["--quiet", "generate", "--m", "16", "--support", "2", "--out", p]).status.success());
    let o = isa(&["check", p]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["m"], 16);
    assert_eq!(report["n"], 64);
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "problem = small\nvariant = predetermined\nmax_iterations = 200\n").unwrap();
    let o = isa(&["--quiet", "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 202);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "MaxIterations");
    assert!(summary["wall_seconds"].is_null());
}
