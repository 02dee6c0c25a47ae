//! Suite running and configuration plumbing behind the command-line front end:
//! single solves with trace output, registry-wide suite runs with a CSV
//! report, and a flat `key=value` configuration format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::driver::{sqp_solve, HessianBackend, SolveResult, SolveStatus, SolverConfig};
use crate::nlp::{get_problem, problem_names, ProblemError};
use crate::qp::SweepOrder;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solve(#[from] crate::driver::SolveError),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Which part of the registry a suite run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteSet {
    Feasible,
    Infeasible,
    All,
}

impl FromStr for SuiteSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "feasible" => Ok(SuiteSet::Feasible),
            "infeasible" => Ok(SuiteSet::Infeasible),
            "all" => Ok(SuiteSet::All),
            other => Err(format!("unknown suite set '{other}' (feasible|infeasible|all)")),
        }
    }
}

/// One suite row, mirroring the CSV schema
/// `problem,status,iters,nf,f,v,kkt,final_rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub problem: String,
    pub status: String,
    pub iters: usize,
    pub nf: u64,
    pub f: f64,
    pub v: f64,
    pub kkt: f64,
    pub final_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    pub succeed: usize,
    pub fail: usize,
}

impl SuiteReport {
    pub fn success_rate(&self) -> f64 {
        if self.rows.is_empty() {
            1.0
        } else {
            self.succeed as f64 / self.rows.len() as f64
        }
    }
}

/// Success means the status a problem of that kind should reach: plain
/// problems must come out optimal, `_inf` problems infeasible-stationary.
pub fn is_success(name: &str, status: SolveStatus) -> bool {
    if name.ends_with("_inf") {
        status == SolveStatus::InfeasibleStationary
    } else {
        status == SolveStatus::Optimal
    }
}

fn row_from_result(name: &str, res: &SolveResult) -> SuiteRow {
    let kkt = match res.status {
        SolveStatus::InfeasibleStationary => res.eps_fea,
        _ => res.eps_opt,
    };
    SuiteRow {
        problem: name.to_string(),
        status: res.status.to_string(),
        iters: res.outer_iters,
        nf: res.counters.n_f,
        f: res.f_final,
        v: res.v_final,
        kkt,
        final_rho: res.rho_final,
    }
}

/// Applies one `key=value` override to the configuration.
pub fn apply_override(config: &mut SolverConfig, key: &str, value: &str) -> Result<(), String> {
    let bad = |what: &str| format!("invalid value '{value}' for {what}");
    let as_f64 = || value.parse::<f64>().map_err(|_| bad(key));
    let as_bool = || value.parse::<bool>().map_err(|_| bad(key));
    match key {
        "gamma_ls" => config.gamma_ls = as_f64()?,
        "theta_rho" => config.theta_rho = as_f64()?,
        "theta_omega" => config.theta_omega = as_f64()?,
        "theta_alpha" => config.theta_alpha = as_f64()?,
        "beta_v" => config.beta_v = as_f64()?,
        "beta_phi" => config.beta_phi = as_f64()?,
        "beta_l" => config.beta_l = as_f64()?,
        "rho_init" => config.rho_init = as_f64()?,
        "omega_init" => config.omega_init = as_f64()?,
        "tol_v" => config.tol_v = as_f64()?,
        "tol_opt" => config.tol_opt = as_f64()?,
        "tol_fea" => config.tol_fea = as_f64()?,
        "tau_eig" => config.tau_eig = as_f64()?,
        "t_cond" => config.t_cond = as_f64()?,
        "max_outer" => config.max_outer = value.parse().map_err(|_| bad(key))?,
        "max_inner_sweeps" => config.max_inner_sweeps = value.parse().map_err(|_| bad(key))?,
        "null_step_shrinks" => config.null_step_shrinks = value.parse().map_err(|_| bad(key))?,
        "ls_max_backtracks" => config.ls_max_backtracks = value.parse().map_err(|_| bad(key))?,
        "shadow_sweeps" => config.shadow_sweeps = value.parse().map_err(|_| bad(key))?,
        "trace_inner" => config.trace_inner = as_bool()?,
        "derivative_check" => config.derivative_check = as_bool()?,
        "solve_feasibility_dual" => config.solve_feasibility_dual = as_bool()?,
        "hessian_backend" => match value {
            "exact" => config.hessian_backend = HessianBackend::Exact,
            "lbfgs" => {
                let memory = match config.hessian_backend {
                    HessianBackend::LBFGS { memory } => memory,
                    HessianBackend::Exact => 10,
                };
                config.hessian_backend = HessianBackend::LBFGS { memory };
            }
            _ => return Err(bad("hessian_backend (exact|lbfgs)")),
        },
        "lbfgs_memory" => {
            let memory = value.parse().map_err(|_| bad(key))?;
            config.hessian_backend = HessianBackend::LBFGS { memory };
        }
        "multiplier_rule" => {
            if value != "qp" {
                return Err(bad("multiplier_rule (qp)"));
            }
        }
        "sweep_order" => match value {
            "ascending" => config.sweep_order = SweepOrder::Ascending,
            "shuffled" => config.sweep_order = SweepOrder::Shuffled { seed: 0 },
            _ => return Err(bad("sweep_order (ascending|shuffled)")),
        },
        "sweep_seed" => {
            let seed = value.parse().map_err(|_| bad(key))?;
            config.sweep_order = SweepOrder::Shuffled { seed };
        }
        other => return Err(format!("unknown key '{other}'")),
    }
    Ok(())
}

/// Parses a flat `key=value` configuration file (UTF-8, one pair per line,
/// `#` comments). Unknown keys are errors; missing keys keep their defaults;
/// the assembled configuration is validated before being returned.
pub fn load_config(path: &Path) -> Result<SolverConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SolverConfig, HarnessError> {
    let mut config = SolverConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(HarnessError::Config {
                line,
                message: format!("expected key=value, got '{stripped}'"),
            });
        };
        apply_override(&mut config, key.trim(), value.trim())
            .map_err(|message| HarnessError::Config { line, message })?;
    }
    config
        .validate()
        .map_err(|e| HarnessError::Config { line: 0, message: e.to_string() })?;
    Ok(config)
}

/// Solves one named problem; when `trace_dir` is given, writes
/// `<name>.trace` (per-iteration records) and `<name>.rho` (the `k rho_k`
/// trajectory).
pub fn run_single(
    name: &str,
    config: &SolverConfig,
    trace_dir: Option<&Path>,
) -> Result<SolveResult, HarnessError> {
    config.validate().map_err(crate::driver::SolveError::from)?;
    let p = get_problem(name)?;
    let res = sqp_solve(&p, config)?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
        let mut rho_text = String::new();
        for (k, rho) in &res.rho_trajectory {
            writeln!(rho_text, "{k} {rho:.16e}").unwrap();
        }
        std::fs::write(dir.join(format!("{name}.rho")), rho_text)?;
        let mut tr = String::from(
            "k f v v_inf eps_opt eps_fea rho omega alpha delta_l0 delta_l_rho delta_j d_norm inner_sweeps rho_reductions null_step ls_trials\n",
        );
        for t in &res.trace {
            writeln!(
                tr,
                "{} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {} {} {} {}",
                t.k,
                t.f,
                t.v,
                t.v_inf,
                t.eps_opt,
                t.eps_fea,
                t.rho,
                t.omega,
                t.alpha,
                t.delta_l0,
                t.delta_l_rho,
                t.delta_j,
                t.d_norm,
                t.inner_sweeps,
                t.rho_reductions,
                t.null_step,
                t.ls_trials
            )
            .unwrap();
        }
        std::fs::write(dir.join(format!("{name}.trace")), tr)?;
    }
    Ok(res)
}

/// Names covered by a suite set, in deterministic order.
pub fn suite_names(set: SuiteSet) -> Vec<String> {
    let base = problem_names();
    let mut out = Vec::new();
    if matches!(set, SuiteSet::Feasible | SuiteSet::All) {
        out.extend(base.iter().map(|s| s.to_string()));
    }
    if matches!(set, SuiteSet::Infeasible | SuiteSet::All) {
        out.extend(base.iter().map(|s| format!("{s}_inf")));
    }
    out
}

/// Solves every problem in the set (optionally across `jobs` threads) and
/// assembles the report in name order. Individual failures become rows with
/// their terminal status; they never abort the suite.
pub fn run_suite(set: SuiteSet, config: &SolverConfig, jobs: usize) -> SuiteReport {
    let names = suite_names(set);
    let rows: Vec<Mutex<Option<SuiteRow>>> = names.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(names.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= names.len() {
                    break;
                }
                let name = &names[i];
                let row = match run_single(name, config, None) {
                    Ok(res) => row_from_result(name, &res),
                    Err(err) => SuiteRow {
                        problem: name.clone(),
                        status: format!("error: {err}"),
                        iters: 0,
                        nf: 0,
                        f: f64::NAN,
                        v: f64::NAN,
                        kkt: f64::NAN,
                        final_rho: f64::NAN,
                    },
                };
                *rows[i].lock().unwrap() = Some(row);
            });
        }
    });
    let rows: Vec<SuiteRow> = rows.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect();
    let succeed = rows
        .iter()
        .filter(|r| {
            let ok_status = if r.problem.ends_with("_inf") {
                r.status == SolveStatus::InfeasibleStationary.to_string()
            } else {
                r.status == SolveStatus::Optimal.to_string()
            };
            ok_status
        })
        .count();
    let fail = rows.len() - succeed;
    SuiteReport { rows, succeed, fail }
}

/// CSV with the fixed header and LF line endings; floats carry 17 significant
/// digits so parsing reproduces the rows exactly.
pub fn report_to_csv(report: &SuiteReport) -> String {
    let mut out = String::from("problem,status,iters,nf,f,v,kkt,final_rho\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.problem, r.status, r.iters, r.nf, r.f, r.v, r.kkt, r.final_rho
        )
        .unwrap();
    }
    writeln!(out, "# succeed={} fail={} rate={:.4}", report.succeed, report.fail, report.success_rate())
        .unwrap();
    out
}

/// Parses a CSV produced by [`report_to_csv`].
pub fn report_from_csv(text: &str) -> Result<SuiteReport, HarnessError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 {
            if line != "problem,status,iters,nf,f,v,kkt,final_rho" {
                return Err(HarnessError::Csv { line: lineno, message: "bad header".into() });
            }
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(HarnessError::Csv {
                line: lineno,
                message: format!("expected 8 fields, got {}", parts.len()),
            });
        }
        let parse_f = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| HarnessError::Csv {
                line: lineno,
                message: format!("bad {what}: '{s}'"),
            })
        };
        rows.push(SuiteRow {
            problem: parts[0].to_string(),
            status: parts[1].to_string(),
            iters: parts[2].parse().map_err(|_| HarnessError::Csv {
                line: lineno,
                message: format!("bad iters: '{}'", parts[2]),
            })?,
            nf: parts[3].parse().map_err(|_| HarnessError::Csv {
                line: lineno,
                message: format!("bad nf: '{}'", parts[3]),
            })?,
            f: parse_f(parts[4], "f")?,
            v: parse_f(parts[5], "v")?,
            kkt: parse_f(parts[6], "kkt")?,
            final_rho: parse_f(parts[7], "final_rho")?,
        });
    }
    let succeed = rows
        .iter()
        .filter(|r| {
            if r.problem.ends_with("_inf") {
                r.status == "infeasible_stationary"
            } else {
                r.status == "optimal"
            }
        })
        .count();
    let fail = rows.len() - succeed;
    Ok(SuiteReport { rows, succeed, fail })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.beta_phi, 0.7);
        assert_eq!(cfg.omega_init, 1e-2);
        assert_eq!(cfg.theta_rho, 0.9);
    }

    #[test]
    fn config_overrides_and_comments() {
        let cfg = parse_config("# comment\nbeta_phi=0.99\n\nmax_outer = 50 # trailing\n").unwrap();
        assert_eq!(cfg.beta_phi, 0.99);
        assert_eq!(cfg.max_outer, 50);
        assert_eq!(cfg.beta_v, 0.1);
    }

    #[test]
    fn config_interval_violation_is_reported() {
        let err = parse_config("beta_v=0.9\nbeta_phi=0.5\n").unwrap_err();
        assert!(err.to_string().contains("beta_v < beta_phi"), "{err}");
    }

    #[test]
    fn config_unknown_key_with_line() {
        let err = parse_config("beta_phi=0.8\nnot_a_key=1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("not_a_key"), "{msg}");
    }

    #[test]
    fn csv_round_trip() {
        let report = SuiteReport {
            rows: vec![
                SuiteRow {
                    problem: "hs28".into(),
                    status: "optimal".into(),
                    iters: 2,
                    nf: 3,
                    f: 1.117108e-13,
                    v: 0.0,
                    kkt: 2.034355e-7,
                    final_rho: 1.0,
                },
                SuiteRow {
                    problem: "hs11_inf".into(),
                    status: "infeasible_stationary".into(),
                    iters: 9,
                    nf: 10,
                    f: -7.998667,
                    v: 1.0,
                    kkt: 2.613585e-8,
                    final_rho: 0.1902388,
                },
            ],
            succeed: 2,
            fail: 0,
        };
        let csv = report_to_csv(&report);
        assert!(csv.starts_with("problem,status,iters,nf,f,v,kkt,final_rho\n"));
        assert!(!csv.contains('\r'));
        let back = report_from_csv(&csv).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn suite_name_sets() {
        let f = suite_names(SuiteSet::Feasible);
        let i = suite_names(SuiteSet::Infeasible);
        let a = suite_names(SuiteSet::All);
        assert_eq!(f.len(), 15);
        assert!(i.iter().all(|n| n.ends_with("_inf")));
        assert_eq!(a.len(), f.len() + i.len());
    }
}
