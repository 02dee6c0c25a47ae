//! Thin command-line front end over the library:
//!
//! ```text
//! dust-sqp solve <name> [--config FILE] [--set key=value]... [--trace DIR]
//! dust-sqp suite <feasible|infeasible|all> [--config FILE] [--jobs N] [--out FILE.csv]
//! ```
//!
//! Exit codes: 0 all runs succeeded (or empty suite), 1 some runs failed,
//! 2 usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use dust_sqp::harness::{
    apply_override, is_success, load_config, report_to_csv, run_single, run_suite, SuiteSet,
};
use dust_sqp::SolverConfig;

const USAGE: &str = "usage:
  dust-sqp solve <name> [--config FILE] [--set key=value]... [--trace DIR]
  dust-sqp suite <feasible|infeasible|all> [--config FILE] [--jobs N] [--out FILE.csv]";

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n{USAGE}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("solve") => cmd_solve(&args[1..]),
        Some("suite") => cmd_suite(&args[1..]),
        Some(other) => usage_error(&format!("unknown command '{other}'")),
        None => usage_error("missing command"),
    }
}

fn parse_config_arg(
    config: &mut SolverConfig,
    args: &[String],
    i: &mut usize,
) -> Result<bool, String> {
    match args[*i].as_str() {
        "--config" => {
            *i += 1;
            let path = args.get(*i).ok_or("--config needs a file argument")?;
            *config = load_config(&PathBuf::from(path)).map_err(|e| e.to_string())?;
            Ok(true)
        }
        "--set" => {
            *i += 1;
            let kv = args.get(*i).ok_or("--set needs key=value")?;
            let (k, v) = kv.split_once('=').ok_or("--set needs key=value")?;
            apply_override(config, k.trim(), v.trim())?;
            Ok(true)
        }
        _ => Ok(false),
    }
}

fn cmd_solve(args: &[String]) -> ExitCode {
    let Some(name) = args.first().filter(|a| !a.starts_with("--")) else {
        return usage_error("solve needs a problem name");
    };
    let mut config = SolverConfig::default();
    let mut trace_dir: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        match parse_config_arg(&mut config, args, &mut i) {
            Ok(true) => {}
            Ok(false) => match args[i].as_str() {
                "--trace" => {
                    i += 1;
                    let Some(dir) = args.get(i) else {
                        return usage_error("--trace needs a directory");
                    };
                    trace_dir = Some(PathBuf::from(dir));
                }
                other => return usage_error(&format!("unknown flag '{other}'")),
            },
            Err(msg) => return usage_error(&msg),
        }
        i += 1;
    }
    if let Err(e) = config.validate() {
        return usage_error(&e.to_string());
    }
    match run_single(name, &config, trace_dir.as_deref()) {
        Ok(res) => {
            println!(
                "{name}: {} after {} iterations\n  f = {:.9e}  v = {:.9e}  kkt = {:.9e}  final_rho = {:.9e}  nf = {}",
                res.status,
                res.outer_iters,
                res.f_final,
                res.v_final,
                match res.status {
                    dust_sqp::SolveStatus::InfeasibleStationary => res.eps_fea,
                    _ => res.eps_opt,
                },
                res.rho_final,
                res.counters.n_f
            );
            if let Some(err) = res.diagnostics.derivative_check_error {
                if err > 1e-5 {
                    eprintln!("warning: derivative check error {err:.3e} at the starting point");
                }
            }
            if is_success(name, res.status) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(dust_sqp::harness::HarnessError::Problem(e)) => usage_error(&e.to_string()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_suite(args: &[String]) -> ExitCode {
    let Some(set) = args.first() else {
        return usage_error("suite needs a set (feasible|infeasible|all)");
    };
    let set: SuiteSet = match set.parse() {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let mut config = SolverConfig::default();
    let mut jobs = 1usize;
    let mut out: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        match parse_config_arg(&mut config, args, &mut i) {
            Ok(true) => {}
            Ok(false) => match args[i].as_str() {
                "--jobs" => {
                    i += 1;
                    match args.get(i).and_then(|s| s.parse().ok()) {
                        Some(n) if n >= 1 => jobs = n,
                        _ => return usage_error("--jobs needs a positive integer"),
                    }
                }
                "--out" => {
                    i += 1;
                    let Some(path) = args.get(i) else {
                        return usage_error("--out needs a file argument");
                    };
                    out = Some(PathBuf::from(path));
                }
                other => return usage_error(&format!("unknown flag '{other}'")),
            },
            Err(msg) => return usage_error(&msg),
        }
        i += 1;
    }
    if let Err(e) = config.validate() {
        return usage_error(&e.to_string());
    }
    let report = run_suite(set, &config, jobs);
    let csv = report_to_csv(&report);
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{csv}"),
    }
    eprintln!(
        "{} problems, {} succeed, {} fail ({:.1}%)",
        report.rows.len(),
        report.succeed,
        report.fail,
        100.0 * report.success_rate()
    );
    if report.fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
