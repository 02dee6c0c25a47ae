//! Outer SQP loop: per-iteration subproblem solve with the in-solver penalty
//! update, the posterior penalty check, a backtracking line search on the
//! exact penalty function, the shrinking inexactness margin `omega`, QP
//! multiplier updates, and optimal / infeasible-stationary termination.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dust::{solve_subproblem, DustError, SubproblemConfig};
use crate::hessian::{build_exact_modified, lbfgs_update, HessianError, HessianModel};
use crate::nlp::{check_derivatives, EvalCounters, NlpProblem};
use crate::penalty::{
    kkt_errors_from, linear_model, violation_of, ModelError, SubproblemData,
};
use crate::qp::SweepOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianBackend {
    /// Modified exact Hessians, factored densely.
    Exact,
    /// Compact limited-memory updates with the given pair memory.
    LBFGS { memory: usize },
}

/// Rule for the multiplier estimate carried between iterations. The QP
/// multipliers are the box-scaled duals of the penalty subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierRule {
    QpMultipliers,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("constraint violated: {0}")]
    Constraint(String),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hessian(#[from] HessianError),
    #[error(transparent)]
    Dust(#[from] DustError),
    #[error("posterior penalty update hit a nonpositive denominator {0}")]
    PsstDenominator(f64),
}

/// All solver parameters. `Default` carries the reference values:
/// `gamma_ls = 0.5`, `rho_init = 1`, `beta_phi = 0.7`, `beta_v = 0.1`,
/// `beta_l = 0.6 beta_phi (1 - beta_v)`, `omega_init = 1e-2`,
/// `theta_rho = 0.9`, `theta_omega = 0.7`, `theta_alpha = 1e-4`,
/// `tol_v = 1e-5`, `tol_opt = 1e-4`, `max_outer = 200`.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub gamma_ls: f64,
    pub theta_rho: f64,
    pub theta_omega: f64,
    pub theta_alpha: f64,
    pub beta_v: f64,
    pub beta_phi: f64,
    pub beta_l: f64,
    pub rho_init: f64,
    pub omega_init: f64,
    pub tol_v: f64,
    pub tol_opt: f64,
    pub tol_fea: f64,
    pub max_outer: usize,
    pub max_inner_sweeps: u64,
    pub tau_eig: f64,
    pub t_cond: f64,
    pub hessian_backend: HessianBackend,
    pub multiplier_rule: MultiplierRule,
    pub sweep_order: SweepOrder,
    /// Solve the feasibility dual alongside the penalty dual (better `r_v`
    /// estimates at the cost of a second coordinate pass).
    pub solve_feasibility_dual: bool,
    /// Bound on consecutive `omega` shrinks after null steps within one
    /// iteration.
    pub null_step_shrinks: u32,
    pub ls_max_backtracks: u32,
    /// Post-termination shadow sweeps per subproblem (diagnostics).
    pub shadow_sweeps: u64,
    /// Keep per-sweep subproblem traces (memory-heavy on long solves).
    pub trace_inner: bool,
    /// Verify first derivatives at the starting point (recorded, not fatal).
    pub derivative_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma_ls: 0.5,
            theta_rho: 0.9,
            theta_omega: 0.7,
            theta_alpha: 1e-4,
            beta_v: 0.1,
            beta_phi: 0.7,
            beta_l: 0.6 * 0.7 * 0.9,
            rho_init: 1.0,
            omega_init: 1e-2,
            tol_v: 1e-5,
            tol_opt: 1e-4,
            tol_fea: 1e-4,
            max_outer: 200,
            max_inner_sweeps: 100_000,
            tau_eig: 1e-4,
            t_cond: 1e6,
            hessian_backend: HessianBackend::Exact,
            multiplier_rule: MultiplierRule::QpMultipliers,
            sweep_order: SweepOrder::Ascending,
            solve_feasibility_dual: true,
            null_step_shrinks: 10,
            ls_max_backtracks: 60,
            shadow_sweeps: 0,
            trace_inner: false,
            derivative_check: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open01 = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::Constraint(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        open01("gamma_ls", self.gamma_ls)?;
        open01("theta_rho", self.theta_rho)?;
        open01("theta_omega", self.theta_omega)?;
        open01("theta_alpha", self.theta_alpha)?;
        open01("beta_v", self.beta_v)?;
        open01("beta_phi", self.beta_phi)?;
        if !(self.beta_v < self.beta_phi) {
            return Err(ConfigError::Constraint(format!(
                "requires beta_v < beta_phi (got beta_v = {}, beta_phi = {})",
                self.beta_v, self.beta_phi
            )));
        }
        let beta_l_max = self.beta_phi * (1.0 - self.beta_v);
        if !(self.beta_l > 0.0 && self.beta_l < beta_l_max) {
            return Err(ConfigError::Constraint(format!(
                "beta_l = {} must lie in (0, beta_phi (1 - beta_v)) = (0, {beta_l_max})",
                self.beta_l
            )));
        }
        for (name, v) in [
            ("rho_init", self.rho_init),
            ("omega_init", self.omega_init),
            ("tol_v", self.tol_v),
            ("tol_opt", self.tol_opt),
            ("tol_fea", self.tol_fea),
            ("tau_eig", self.tau_eig),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Constraint(format!("{name} = {v} must be positive")));
            }
        }
        if self.t_cond < 1.0 {
            return Err(ConfigError::Constraint(format!(
                "t_cond = {} must be >= 1",
                self.t_cond
            )));
        }
        if self.max_outer == 0 {
            return Err(ConfigError::Constraint("max_outer must be >= 1".into()));
        }
        if let HessianBackend::LBFGS { memory } = self.hessian_backend {
            if memory == 0 {
                return Err(ConfigError::Constraint("lbfgs memory must be >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    InfeasibleStationary,
    IterationLimit,
    LineSearchFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::InfeasibleStationary => "infeasible_stationary",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::LineSearchFailure => "line_search_failure",
        };
        f.write_str(s)
    }
}

/// One outer-iteration record. `f`, `v`, `v_inf` are taken at the iterate the
/// step starts from; `rho` and `omega` are the values used by that step.
#[derive(Debug, Clone, Copy)]
pub struct IterTrace {
    pub k: usize,
    pub f: f64,
    pub v: f64,
    pub v_inf: f64,
    pub eps_opt: f64,
    pub eps_fea: f64,
    pub rho: f64,
    pub omega: f64,
    pub alpha: f64,
    pub delta_l0: f64,
    pub delta_l_rho: f64,
    pub delta_j: f64,
    pub d_norm: f64,
    pub inner_sweeps: u64,
    pub rho_reductions: u64,
    pub null_step: bool,
    pub ls_trials: u32,
}

/// Health counters accumulated over a solve; all regression-suite contracts
/// read from here.
#[derive(Debug, Clone, Copy)]
pub struct SolveDiagnostics {
    /// Max of `(D - J)/(1 + |J|)` over both weak-duality pairs and every
    /// inner sweep.
    pub max_weak_duality_gap: f64,
    /// Penalty reductions fired during post-termination shadow continuations.
    pub shadow_reductions: u64,
    /// False when any shadow continuation failed to reach a 50-sweep
    /// reduction-free tail within its budget (meaningful with shadow sweeps on).
    pub shadow_tails_clean: bool,
    pub subproblem_cap_hits: u64,
    /// Times the posterior update took its fallback formula.
    pub psst_fallbacks: u64,
    /// Min over steps of `dl(d,rho_k) + omega - beta_l (dl(d,0) + omega)`.
    pub min_psst_margin: f64,
    /// Min over steps of `-theta_alpha alpha dl - (phi_new - phi_old)`.
    pub min_armijo_margin: f64,
    /// Worst per-sweep dual change at fixed rho (>= 0 means monotone ascent).
    pub min_dual_ascent: f64,
    pub null_steps: u64,
    pub omega_shrinks: u64,
    /// Max relative first-derivative error at x0, when checked.
    pub derivative_check_error: Option<f64>,
}

impl Default for SolveDiagnostics {
    fn default() -> Self {
        SolveDiagnostics {
            max_weak_duality_gap: f64::NEG_INFINITY,
            shadow_reductions: 0,
            shadow_tails_clean: true,
            subproblem_cap_hits: 0,
            psst_fallbacks: 0,
            min_psst_margin: f64::INFINITY,
            min_armijo_margin: f64::INFINITY,
            min_dual_ascent: f64::INFINITY,
            null_steps: 0,
            omega_shrinks: 0,
            derivative_check_error: None,
        }
    }
}

#[derive(Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub v_final: f64,
    pub v_inf_final: f64,
    pub eps_opt: f64,
    pub eps_fea: f64,
    pub rho_final: f64,
    pub omega_final: f64,
    pub outer_iters: usize,
    pub counters: EvalCounters,
    /// `(k, rho_k)` per completed iteration.
    pub rho_trajectory: Vec<(usize, f64)>,
    pub trace: Vec<IterTrace>,
    pub diagnostics: SolveDiagnostics,
}

/// Posterior penalty check: keep `rho_tilde` when
/// `dl(d, rho_tilde) + omega >= beta_l (dl(d, 0) + omega)`, otherwise return
/// the closed-form weight that restores the inequality. Also reports whether
/// the fallback branch fired.
pub fn psst_update(
    rho_tilde: f64,
    d: &DVector<f64>,
    sd: &SubproblemData,
    h: &HessianModel,
    omega: f64,
    beta_l: f64,
) -> Result<(f64, bool), SolveError> {
    let delta_l0 = sd.j0 - linear_model(d, 0.0, sd);
    let gd = sd.g.dot(d);
    let delta_l_tilde = delta_l0 - rho_tilde * gd;
    if delta_l_tilde + omega >= beta_l * (delta_l0 + omega) {
        return Ok((rho_tilde, false));
    }
    // reaching here forces rho_tilde <g, d> > (1 - beta_l)(dl0 + omega) > 0
    let denom = gd + 0.5 * h.quad_rho(d);
    if denom <= 0.0 {
        return Err(SolveError::PsstDenominator(denom));
    }
    let rho_k = (1.0 - beta_l) * (delta_l0 + omega) / denom;
    Ok((rho_k.min(rho_tilde), true))
}

#[derive(Debug, Clone, Copy)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub f_new: f64,
    pub v_new: f64,
    pub trials: u32,
    pub failed: bool,
    /// Merit change at the last finite trial; tells a roundoff stall apart
    /// from a genuine ascent direction when the trial cap is exhausted.
    pub last_phi_change: f64,
}

/// Largest `alpha` in `{1, gamma, gamma^2, ...}` with
/// `phi(x + alpha d, rho) - phi(x, rho) <= -theta_alpha alpha delta_l_rho`.
/// Nonfinite trial values reject the step; exhausting the trial cap reports
/// failure instead of taking a step.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    p: &NlpProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    rho: f64,
    delta_l_rho: f64,
    phi_x: f64,
    gamma_ls: f64,
    theta_alpha: f64,
    max_backtracks: u32,
    counters: &mut EvalCounters,
) -> LineSearchOutcome {
    let mut alpha = 1.0;
    let mut last_phi_change = f64::INFINITY;
    for t in 0..max_backtracks {
        let xt: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + alpha * di).collect();
        let f_t = p.f(&xt, counters);
        let c_t = p.c(&xt, counters);
        let (v_t, _) = violation_of(&c_t, p.m_eq);
        let phi_t = rho * f_t + v_t;
        if phi_t.is_finite() {
            if phi_t - phi_x <= -theta_alpha * alpha * delta_l_rho {
                return LineSearchOutcome {
                    alpha,
                    f_new: f_t,
                    v_new: v_t,
                    trials: t + 1,
                    failed: false,
                    last_phi_change: phi_t - phi_x,
                };
            }
            last_phi_change = phi_t - phi_x;
        }
        alpha *= gamma_ls;
    }
    LineSearchOutcome {
        alpha: 0.0,
        f_new: 0.0,
        v_new: 0.0,
        trials: max_backtracks,
        failed: true,
        last_phi_change,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    Continue,
    Optimal,
    InfeasibleStationary,
}

/// Classification from one multiplier estimate: optimal when both the max
/// violation and the optimality error are inside tolerance, infeasible
/// stationary when the point is materially infeasible yet stationary for the
/// infeasibility measure.
pub fn termination_check(
    p: &NlpProblem,
    x: &[f64],
    eta: &DVector<f64>,
    tol_v: f64,
    tol_opt: f64,
    tol_fea: f64,
    counters: &mut EvalCounters,
) -> TerminationStatus {
    let rep = crate::penalty::kkt_errors(p, x, eta, counters);
    classify(rep.v_inf, rep.eps_opt, rep.eps_fea, tol_v, tol_opt, tol_fea)
}

/// An infeasibility certificate only counts when the weighted errors sit well
/// below the raw violation; a near-zero multiplier estimate at a mildly
/// infeasible iterate makes every feasibility-error term small for free, and
/// must not stop the solve.
const CERTIFICATE_DOMINANCE: f64 = 0.1;

fn classify(
    v_inf: f64,
    eps_opt: f64,
    eps_fea: f64,
    tol_v: f64,
    tol_opt: f64,
    tol_fea: f64,
) -> TerminationStatus {
    if v_inf <= tol_v && eps_opt <= tol_opt {
        TerminationStatus::Optimal
    } else if v_inf > tol_v && eps_fea <= tol_fea && eps_fea <= CERTIFICATE_DOMINANCE * v_inf {
        TerminationStatus::InfeasibleStationary
    } else {
        TerminationStatus::Continue
    }
}

struct LbfgsHistory {
    /// `(s, y)` pairs for the objective part.
    f_pairs: VecDeque<(DVector<f64>, DVector<f64>)>,
    /// `(s, y)` pairs for the multiplier-weighted constraint part.
    zero_pairs: VecDeque<(DVector<f64>, DVector<f64>)>,
    /// Step, old gradient, and old `J^T eta` awaiting the next evaluation.
    pending: Option<(DVector<f64>, DVector<f64>, DVector<f64>)>,
    memory: usize,
}

impl LbfgsHistory {
    fn new(memory: usize) -> Self {
        LbfgsHistory {
            f_pairs: VecDeque::new(),
            zero_pairs: VecDeque::new(),
            pending: None,
            memory,
        }
    }

    fn absorb(&mut self, g_new: &DVector<f64>, jt_eta_new: &DVector<f64>) {
        if let Some((s, g_old, jt_eta_old)) = self.pending.take() {
            if self.f_pairs.len() == self.memory {
                self.f_pairs.pop_front();
            }
            self.f_pairs.push_back((s.clone(), g_new - g_old));
            if self.zero_pairs.len() == self.memory {
                self.zero_pairs.pop_front();
            }
            self.zero_pairs.push_back((s, jt_eta_new - jt_eta_old));
        }
    }
}

fn jac_t_eta(jac: &[Vec<f64>], eta: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (row, ei) in jac.iter().zip(eta.iter()) {
        if *ei != 0.0 {
            for j in 0..n {
                out[j] += ei * row[j];
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn build_hessian(
    p: &NlpProblem,
    x: &[f64],
    eta: &DVector<f64>,
    rho: f64,
    config: &SolverConfig,
    history: &LbfgsHistory,
    counters: &mut EvalCounters,
) -> Result<HessianModel, SolveError> {
    match config.hessian_backend {
        HessianBackend::Exact => {
            let n = p.n;
            let hf_raw = p.hess_f(x, counters);
            let mut h0_raw = DMatrix::zeros(n, n);
            for i in 0..p.m {
                if eta[i] != 0.0 {
                    h0_raw += eta[i] * p.hess_c(x, i, counters);
                }
            }
            let hf = build_exact_modified(&hf_raw, config.tau_eig, config.t_cond);
            let h0 = build_exact_modified(&h0_raw, config.tau_eig, config.t_cond);
            Ok(HessianModel::dense_from_parts(hf, h0, rho)?)
        }
        HessianBackend::LBFGS { memory } => {
            let hist_f: Vec<_> = history.f_pairs.iter().cloned().collect();
            let hist_0: Vec<_> = history.zero_pairs.iter().cloned().collect();
            let (f_fac, _) = lbfgs_update(p.n, &hist_f, memory);
            let (z_fac, _) = lbfgs_update(p.n, &hist_0, memory);
            Ok(HessianModel::low_rank_from_parts(&f_fac, &z_fac, rho)?)
        }
    }
}

/// Runs the full penalty-SQP iteration from the problem's starting point.
pub fn sqp_solve(p: &NlpProblem, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    config.validate()?;
    let mut counters = EvalCounters::default();
    let mut diag = SolveDiagnostics::default();
    if config.derivative_check {
        diag.derivative_check_error = Some(check_derivatives(p, &p.x0, 1e-6));
    }

    let n = p.n;
    let mut x = DVector::from_vec(p.x0.clone());
    // box-scaled multiplier estimate (QP multipliers) and the rho it came from
    let mut eta = DVector::zeros(p.m);
    let mut eta_rho = config.rho_init;
    // feasibility-dual estimate backing the infeasible-stationarity test
    let mut eta_fea = DVector::zeros(p.m);
    let mut rho = config.rho_init;
    let mut omega = config.omega_init;
    let mut history = LbfgsHistory::new(match config.hessian_backend {
        HessianBackend::LBFGS { memory } => memory,
        HessianBackend::Exact => 0,
    });
    let mut f_x = p.f(x.as_slice(), &mut counters);

    let mut trace: Vec<IterTrace> = Vec::new();
    let mut rho_trajectory: Vec<(usize, f64)> = Vec::new();

    let sub_cfg = |cfg: &SolverConfig| SubproblemConfig {
        beta_v: cfg.beta_v,
        beta_phi: cfg.beta_phi,
        theta_rho: cfg.theta_rho,
        max_sweeps: cfg.max_inner_sweeps,
        sweep_order: cfg.sweep_order,
        solve_feasibility_dual: cfg.solve_feasibility_dual,
        shadow_sweeps: cfg.shadow_sweeps,
        trace: cfg.trace_inner,
    };

    let finish = |status: SolveStatus,
                  x: &DVector<f64>,
                  f: f64,
                  v: f64,
                  v_inf: f64,
                  eps_opt: f64,
                  eps_fea: f64,
                  rho: f64,
                  omega: f64,
                  k: usize,
                  counters: EvalCounters,
                  rho_trajectory: Vec<(usize, f64)>,
                  trace: Vec<IterTrace>,
                  diag: SolveDiagnostics| SolveResult {
        status,
        x_final: x.iter().copied().collect(),
        f_final: f,
        v_final: v,
        v_inf_final: v_inf,
        eps_opt,
        eps_fea,
        rho_final: rho,
        omega_final: omega,
        outer_iters: k,
        counters,
        rho_trajectory,
        trace,
        diagnostics: diag,
    };

    for k in 0..config.max_outer {
        // one evaluation of the current point serves termination, the
        // linearization, and the curvature history
        let g = DVector::from_vec(p.grad_f(x.as_slice(), &mut counters));
        let c = p.c(x.as_slice(), &mut counters);
        let jac = p.jac_c(x.as_slice(), &mut counters);
        let (v, v_inf) = violation_of(&c, p.m_eq);

        history.absorb(&g, &jac_t_eta(&jac, &eta, n));

        // optimality error with multipliers on the Lagrangian scale,
        // feasibility error with the box-scaled feasibility duals
        let eta_kkt = &eta / eta_rho;
        let eps_opt = kkt_errors_from(&g, &c, &jac, p.m_eq, &eta_kkt).eps_opt;
        let eps_fea = kkt_errors_from(&g, &c, &jac, p.m_eq, &eta_fea).eps_fea;

        match classify(v_inf, eps_opt, eps_fea, config.tol_v, config.tol_opt, config.tol_fea) {
            TerminationStatus::Optimal => {
                return Ok(finish(
                    SolveStatus::Optimal,
                    &x,
                    f_x,
                    v,
                    v_inf,
                    eps_opt,
                    eps_fea,
                    rho,
                    omega,
                    k,
                    counters,
                    rho_trajectory,
                    trace,
                    diag,
                ));
            }
            TerminationStatus::InfeasibleStationary => {
                return Ok(finish(
                    SolveStatus::InfeasibleStationary,
                    &x,
                    f_x,
                    v,
                    v_inf,
                    eps_opt,
                    eps_fea,
                    rho,
                    omega,
                    k,
                    counters,
                    rho_trajectory,
                    trace,
                    diag,
                ));
            }
            TerminationStatus::Continue => {}
        }

        let sd = SubproblemData::from_parts(g.clone(), &c, jac, p.m_eq)?;
        let mut h = build_hessian(p, x.as_slice(), &eta, rho, config, &history, &mut counters)?;

        // subproblem with bounded omega shrinks after null steps; steps below
        // the roundoff floor of the merit function are nulls in all but name
        let negligible = |d: &DVector<f64>| d.amax() <= 1e-12 * (1.0 + x.amax());
        let mut warm = eta.clone();
        let mut shrinks = 0u32;
        let (res, is_null) = loop {
            let (res, h2) = solve_subproblem(&sd, h, rho, omega, Some(&warm), &sub_cfg(config))?;
            h = h2;
            rho = res.rho_tilde;
            diag.max_weak_duality_gap =
                diag.max_weak_duality_gap.max(res.stats.max_weak_duality_gap);
            diag.shadow_reductions += res.stats.shadow_reductions;
            if res.stats.shadow_tail_clean == Some(false) {
                diag.shadow_tails_clean = false;
            }
            diag.min_dual_ascent = diag.min_dual_ascent.min(res.stats.min_dual_ascent);
            if res.cap_hit {
                diag.subproblem_cap_hits += 1;
            }
            let is_null = res.null_step || negligible(&res.d);
            if is_null && shrinks < config.null_step_shrinks {
                shrinks += 1;
                diag.omega_shrinks += 1;
                omega *= config.theta_omega;
                warm = sd.scatter_multipliers(&res.zeta);
                continue;
            }
            break (res, is_null);
        };

        let zeta_full = sd.scatter_multipliers(&res.zeta);
        let w_full = sd.scatter_multipliers(&res.w);

        if is_null {
            diag.null_steps += 1;
            // shrink budget exhausted without movement: decide from the fresh
            // multipliers before taking the null step
            let eps_opt_new = kkt_errors_from(&g, &c, &sd_jac(&sd, p.m, n), p.m_eq, &(&zeta_full / rho)).eps_opt;
            let eps_fea_new = kkt_errors_from(&g, &c, &sd_jac(&sd, p.m, n), p.m_eq, &w_full).eps_fea;
            let status = classify(
                v_inf,
                eps_opt_new,
                eps_fea_new,
                config.tol_v,
                config.tol_opt,
                config.tol_fea,
            );
            if status != TerminationStatus::Continue {
                let st = if status == TerminationStatus::Optimal {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::InfeasibleStationary
                };
                rho_trajectory.push((k, rho));
                return Ok(finish(
                    st,
                    &x,
                    f_x,
                    v,
                    v_inf,
                    eps_opt_new,
                    eps_fea_new,
                    rho,
                    omega,
                    k,
                    counters,
                    rho_trajectory,
                    trace,
                    diag,
                ));
            }
        }

        // posterior penalty check
        let (rho_k, fallback) = psst_update(rho, &res.d, &sd, &h, omega, config.beta_l)?;
        if fallback {
            diag.psst_fallbacks += 1;
        }
        rho = rho_k;
        let delta_l0 = res.delta_l0;
        let delta_l_rho = delta_l0 - rho * sd.g.dot(&res.d);
        diag.min_psst_margin = diag
            .min_psst_margin
            .min(delta_l_rho + omega - config.beta_l * (delta_l0 + omega));

        // line search on phi(., rho_k); null steps skip it with alpha = 1
        let phi_x = rho * f_x + v;
        let null_outcome = LineSearchOutcome {
            alpha: 1.0,
            f_new: f_x,
            v_new: v,
            trials: 0,
            failed: false,
            last_phi_change: 0.0,
        };
        let mut is_null = is_null;
        let mut ls = if is_null {
            null_outcome
        } else {
            line_search(
                p,
                &x,
                &res.d,
                rho,
                delta_l_rho,
                phi_x,
                config.gamma_ls,
                config.theta_alpha,
                config.ls_max_backtracks,
                &mut counters,
            )
        };
        if ls.failed {
            // an exhausted backtrack whose last trial changed the merit only
            // at roundoff scale is a stalled step, not a failure
            if ls.last_phi_change.abs() <= 1e-10 * (1.0 + phi_x.abs()) {
                is_null = true;
                ls = null_outcome;
                diag.null_steps += 1;
            } else {
                rho_trajectory.push((k, rho));
                return Ok(finish(
                    SolveStatus::LineSearchFailure,
                    &x,
                    f_x,
                    v,
                    v_inf,
                    eps_opt,
                    eps_fea,
                    rho,
                    omega,
                    k,
                    counters,
                    rho_trajectory,
                    trace,
                    diag,
                ));
            }
        }
        let phi_new = rho * ls.f_new + ls.v_new;
        diag.min_armijo_margin = diag
            .min_armijo_margin
            .min(-config.theta_alpha * ls.alpha * delta_l_rho - (phi_new - phi_x));

        trace.push(IterTrace {
            k,
            f: f_x,
            v,
            v_inf,
            eps_opt,
            eps_fea,
            rho,
            omega,
            alpha: ls.alpha,
            delta_l0,
            delta_l_rho,
            delta_j: res.delta_j,
            d_norm: res.d.norm(),
            inner_sweeps: res.inner_iters,
            rho_reductions: res.rho_reductions,
            null_step: is_null,
            ls_trials: ls.trials,
        });
        rho_trajectory.push((k, rho));

        // step, multipliers, margin schedule
        if !is_null {
            x.axpy(ls.alpha, &res.d, 1.0);
            f_x = ls.f_new;
        }
        if config.multiplier_rule == MultiplierRule::QpMultipliers {
            eta = zeta_full;
            eta_rho = rho;
            eta_fea = w_full;
        }
        if matches!(config.hessian_backend, HessianBackend::LBFGS { .. }) && !is_null {
            let s = ls.alpha * &res.d;
            let jt_eta_old = {
                // Jacobian rows at the pre-step point, weighted by the new eta
                let mut out = DVector::zeros(n);
                for (row, ei) in sd.rows.iter().zip(res.zeta.iter()) {
                    let full_i = row.orig_index;
                    let _ = full_i;
                    if *ei != 0.0 {
                        out.axpy(*ei, &row.a, 1.0);
                    }
                }
                out
            };
            history.pending = Some((s, g.clone(), jt_eta_old));
        }
        omega *= config.theta_omega;
    }

    // iteration limit: evaluate the final point for the report
    let g = DVector::from_vec(p.grad_f(x.as_slice(), &mut counters));
    let c = p.c(x.as_slice(), &mut counters);
    let jac = p.jac_c(x.as_slice(), &mut counters);
    let (v, v_inf) = violation_of(&c, p.m_eq);
    let eps_opt = kkt_errors_from(&g, &c, &jac, p.m_eq, &(&eta / eta_rho)).eps_opt;
    let eps_fea = kkt_errors_from(&g, &c, &jac, p.m_eq, &eta_fea).eps_fea;
    Ok(finish(
        SolveStatus::IterationLimit,
        &x,
        f_x,
        v,
        v_inf,
        eps_opt,
        eps_fea,
        rho,
        omega,
        config.max_outer,
        counters,
        rho_trajectory,
        trace,
        diag,
    ))
}

/// Reassembled Jacobian rows from the subproblem data (zeros at dropped rows).
fn sd_jac(sd: &SubproblemData, m: usize, n: usize) -> Vec<Vec<f64>> {
    let mut jac = vec![vec![0.0; n]; m];
    for row in &sd.rows {
        jac[row.orig_index] = row.a.iter().copied().collect();
    }
    jac
}
