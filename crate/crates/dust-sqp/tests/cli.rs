//! End-to-end checks of the command-line interface: exit codes, trace files,
//! CSV output, configuration handling, and run-to-run determinism.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dust-sqp"))
}

#[test]
fn solve_writes_trajectory_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "hs28", "--trace", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rho = std::fs::read_to_string(dir.path().join("hs28.rho")).unwrap();
    let lines: Vec<&str> = rho.lines().collect();
    assert_eq!(lines.len(), 2, "hs28 should take two iterations");
    for line in lines {
        let val: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(val, 1.0, "hs28 keeps the initial penalty weight");
    }
    assert!(dir.path().join("hs28.trace").exists());
}

#[test]
fn unknown_problem_exits_2() {
    let out = bin().args(["solve", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("hs11"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["solve"],
        vec!["suite", "everything"],
        vec!["solve", "hs28", "--frobnicate"],
        vec!["frobnicate"],
        vec!["suite", "feasible", "--jobs", "zero"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn conflicting_overrides_exit_2() {
    let out = bin()
        .args(["solve", "hs28", "--set", "beta_v=0.9", "--set", "beta_phi=0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta_v < beta_phi"));
}

#[test]
fn config_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solver.cfg");
    std::fs::write(&cfg, "# tighter optimality test\nbeta_phi=0.99\nmax_outer = 50\n").unwrap();
    let out = bin()
        .args(["solve", "hs28", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&cfg, "beta_phi=0.99\nwhatever=1\n").unwrap();
    let out = bin()
        .args(["solve", "hs28", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn suite_csv_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let run = |path: &std::path::Path, jobs: &str| {
        let out = bin()
            .args(["suite", "infeasible", "--jobs", jobs, "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "1");
    run(&b, "4");
    let ca = std::fs::read(&a).unwrap();
    let cb = std::fs::read(&b).unwrap();
    assert_eq!(ca, cb, "suite output must be bit-identical across job counts");
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("problem,status,iters,nf,f,v,kkt,final_rho\n"));
    assert!(!text.contains('\r'), "LF line endings only");
    let report = dust_sqp::harness::report_from_csv(&text).unwrap();
    assert_eq!(report.rows.len(), 15);
    assert_eq!(report.fail, 0);
}

#[test]
fn single_solve_prints_summary() {
    let out = bin().args(["solve", "hs11"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("optimal") && text.contains("final_rho"), "{text}");
}
