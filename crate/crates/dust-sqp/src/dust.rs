//! Ratio tests and the dynamic penalty update run inside the subproblem solve.
//!
//! After each coordinate-ascent sweep the controller forms, with
//! `J0_w = J(0) + omega`,
//!
//! ```text
//! r_v   = (J0_w - l(d, 0)) / (J0_w - (D(w, 0))_+)
//! r_phi = (J0_w - J(d, rho)) / (J0_w - D(zeta, rho))
//! r_c   = 1 - sqrt(chi(d, zeta) / J0_w)
//! ```
//!
//! and decides: all three over their thresholds terminates the solve; the
//! optimality pair `(r_phi, r_c)` passing without `r_v` cuts `rho` by
//! `theta_rho` and continues; anything else keeps sweeping. `chi` is a
//! complementarity measure, zero exactly at primal-dual optimal pairs, which
//! keeps an accidentally tight `r_phi` from driving `rho` to zero while the
//! dual estimate is still poor.

use nalgebra::DVector;
use thiserror::Error;

use crate::hessian::{HessianError, HessianModel};
use crate::penalty::{linear_model, SubproblemData};
use crate::qp::{
    feasibility_dual_value, penalty_dual_value, primal_objective_h0, primal_recover_cached,
    sufficient_dual_pair, sweep, DualIterate, QpWorkspace, SweepOrder,
};

#[derive(Debug, Error)]
pub enum DustError {
    #[error("dual value {dual} exceeds J0 + omega = {j0_omega}; weak duality violated")]
    RatioContract { dual: f64, j0_omega: f64 },
    #[error(transparent)]
    Hessian(#[from] HessianError),
}

/// Outcome of one ratio evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DustDecision {
    Terminate,
    ReduceRho,
    Continue,
}

/// Ratio snapshot for one subproblem iterate.
#[derive(Debug, Clone)]
pub struct RatioReport {
    pub j0: f64,
    pub j0_omega: f64,
    pub r_v: f64,
    pub r_phi: f64,
    pub r_c: f64,
    pub chi: f64,
    pub d_used: DVector<f64>,
    pub decision: DustDecision,
}

/// Weighted complementarity measure: rows with a nonzero scaled residual
/// `<a_bar, d> + b_bar` contribute `weight * ||a|| * dist(d, C_i)` with weight
/// `1 - zeta_i` on positive residuals (equalities and inequalities) and
/// `1 + zeta_i` on negative equality residuals; satisfied rows contribute 0.
pub fn complementarity_chi(d: &DVector<f64>, zeta: &DVector<f64>, sd: &SubproblemData) -> f64 {
    let mut chi = 0.0;
    for (i, row) in sd.rows.iter().enumerate() {
        let resid = row.a_bar.dot(d) + row.b_bar;
        // ||a|| * dist(d, C_i) equals the unscaled residual magnitude
        let weighted_dist = row.norm_a * resid.abs();
        if row.is_equality {
            if resid > 0.0 {
                chi += (1.0 - zeta[i]) * weighted_dist;
            } else if resid < 0.0 {
                chi += (1.0 + zeta[i]) * weighted_dist;
            }
        } else if resid > 0.0 {
            chi += (1.0 - zeta[i]) * weighted_dist;
        }
    }
    chi
}

/// Dual values entering the ratios; both come from caches the sweep maintains.
pub struct DualSnapshot {
    /// `D(zeta, rho)` at the current `rho`.
    pub d_zeta_rho: f64,
    /// `D(w, 0)` for the best feasibility multipliers.
    pub d_w_0: f64,
}

/// Forms the three ratios for the substituted step `d_used`; `j_d_rho` is
/// `J(d_used, rho)`.
pub fn compute_ratios(
    d_used: &DVector<f64>,
    zeta: &DVector<f64>,
    duals: &DualSnapshot,
    omega: f64,
    sd: &SubproblemData,
    j_d_rho: f64,
) -> Result<RatioReport, DustError> {
    assert!(omega > 0.0);
    let j0 = sd.j0;
    let j0_omega = j0 + omega;
    let denom_phi = j0_omega - duals.d_zeta_rho;
    if denom_phi <= 0.0 {
        return Err(DustError::RatioContract { dual: duals.d_zeta_rho, j0_omega });
    }
    let denom_v = j0_omega - duals.d_w_0.max(0.0);
    if denom_v <= 0.0 {
        return Err(DustError::RatioContract { dual: duals.d_w_0, j0_omega });
    }
    let l_d0 = linear_model(d_used, 0.0, sd);
    let r_v = (j0_omega - l_d0) / denom_v;
    let r_phi = (j0_omega - j_d_rho) / denom_phi;
    let chi = complementarity_chi(d_used, zeta, sd);
    let r_c = 1.0 - (chi / j0_omega).sqrt();
    Ok(RatioReport {
        j0,
        j0_omega,
        r_v,
        r_phi,
        r_c,
        chi,
        d_used: d_used.clone(),
        decision: DustDecision::Continue,
    })
}

/// The decision rule: terminate when all of `(Rphi)`, `(Rc)`, `(Rv)` hold;
/// cut `rho` by `theta_rho` when only the feasibility test `(Rv)` fails.
pub fn dust_decide(
    r_v: f64,
    r_phi: f64,
    r_c: f64,
    beta_v: f64,
    beta_phi: f64,
    theta_rho: f64,
    rho: f64,
) -> (DustDecision, f64) {
    debug_assert!(0.0 < beta_v && beta_v < beta_phi && beta_phi < 1.0);
    debug_assert!(0.0 < theta_rho && theta_rho < 1.0);
    let phi_ok = r_phi >= beta_phi;
    let c_ok = r_c >= beta_v;
    let v_ok = r_v >= beta_v;
    if phi_ok && c_ok && v_ok {
        (DustDecision::Terminate, rho)
    } else if phi_ok && c_ok {
        (DustDecision::ReduceRho, theta_rho * rho)
    } else {
        (DustDecision::Continue, rho)
    }
}

/// Knobs for one subproblem solve.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemConfig {
    pub beta_v: f64,
    pub beta_phi: f64,
    pub theta_rho: f64,
    pub max_sweeps: u64,
    pub sweep_order: SweepOrder,
    /// Solve the feasibility dual alongside; off reuses `zeta` for `w`.
    pub solve_feasibility_dual: bool,
    /// Extra sweeps run after a Terminate decision, counting would-be
    /// `ReduceRho` firings without acting on them.
    pub shadow_sweeps: u64,
    /// Record per-sweep ratio traces.
    pub trace: bool,
}

/// One per-sweep trace record.
#[derive(Debug, Clone, Copy)]
pub struct SweepTrace {
    pub sweep: u64,
    pub rho: f64,
    pub r_v: f64,
    pub r_phi: f64,
    pub r_c: f64,
    pub j_d_rho: f64,
    pub d_zeta_rho: f64,
}

/// Health counters accumulated over one subproblem solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubproblemStats {
    /// Max of `(D - J)/(1 + |J|)` over both weak-duality pairs and all sweeps.
    pub max_weak_duality_gap: f64,
    /// Sweep index of the last `ReduceRho` (1-based), if any fired.
    pub last_reduce_sweep: Option<u64>,
    /// `ReduceRho` firings during the post-termination shadow continuation.
    pub shadow_reductions: u64,
    /// Whether the shadow continuation ended with 50 consecutive
    /// reduction-free sweeps (`None` when the shadow phase is off).
    pub shadow_tail_clean: Option<bool>,
    /// Worst per-sweep change of either dual at fixed `rho` (>= 0: monotone).
    pub min_dual_ascent: f64,
}

/// Result of an inexact subproblem solve.
#[derive(Debug)]
pub struct SubproblemResult {
    pub d: DVector<f64>,
    /// Multipliers on the kept rows (subproblem indexing).
    pub zeta: DVector<f64>,
    /// Best feasibility-dual multipliers and their value.
    pub w: DVector<f64>,
    pub d_w_0: f64,
    pub rho_tilde: f64,
    pub delta_l0: f64,
    pub delta_l_rho: f64,
    pub delta_j: f64,
    pub inner_iters: u64,
    pub rho_reductions: u64,
    pub null_step: bool,
    pub cap_hit: bool,
    pub stats: SubproblemStats,
    pub trace: Vec<SweepTrace>,
}

/// Continues a terminated solve on copies of its state with the update rule
/// live but termination ignored: sweeps until 50 consecutive reduction-free
/// sweeps are seen or the shadow budget runs out. Returns the reductions
/// fired and whether the clean tail was reached.
fn shadow_continuation(
    sd: &SubproblemData,
    h: &HessianModel,
    rho_in: f64,
    omega: f64,
    ws_in: &QpWorkspace,
    state_in: &DualIterate,
    cfg: &SubproblemConfig,
) -> Result<(u64, bool), DustError> {
    const CLEAN_TAIL: u64 = 50;
    let mut h = h.clone();
    let mut ws = ws_in.clone();
    let mut state = state_in.clone();
    let mut rho = rho_in;
    let mut reds = 0u64;
    let mut clean = 0u64;
    let mut budget = cfg.shadow_sweeps;
    while clean < CLEAN_TAIL && budget > 0 {
        budget -= 1;
        sweep(&mut state, rho, &ws, sd, &h, cfg.solve_feasibility_dual);
        let d_zeta_rho = penalty_dual_value(sd, &h, rho, &state.cache_v_zeta, &state.zeta);
        let d_raw = primal_recover_cached(&state.cache_v_zeta, rho, sd, &h);
        let (d_used, j_d_rho) = sufficient_dual_pair(d_raw, rho, sd, &h);
        let duals = DualSnapshot { d_zeta_rho, d_w_0: state.d_best_w };
        let report = compute_ratios(&d_used, &state.zeta, &duals, omega, sd, j_d_rho)?;
        let (decision, new_rho) = dust_decide(
            report.r_v,
            report.r_phi,
            report.r_c,
            cfg.beta_v,
            cfg.beta_phi,
            cfg.theta_rho,
            rho,
        );
        if decision == DustDecision::ReduceRho {
            reds += 1;
            clean = 0;
            rho = new_rho;
            h = h.rescale_rho(rho)?;
            ws.refresh_penalty_side(sd, &h, rho);
            state.refresh_penalty_cache(&ws);
        } else {
            clean += 1;
        }
    }
    Ok((reds, clean >= CLEAN_TAIL))
}

/// Runs coordinate-ascent sweeps with the dynamic update until it terminates
/// or the sweep cap is reached; on a cap the best-objective iterate seen at
/// the final `rho` is returned with `cap_hit` set. The Hessian model is taken
/// by value and handed back so penalty reductions can rescale the standing
/// factors instead of rebuilding.
pub fn solve_subproblem(
    sd: &SubproblemData,
    mut h: HessianModel,
    rho_in: f64,
    omega: f64,
    warm_eta: Option<&DVector<f64>>,
    cfg: &SubproblemConfig,
) -> Result<(SubproblemResult, HessianModel), DustError> {
    assert!(rho_in > 0.0 && omega > 0.0);
    let mut rho = rho_in;
    if (h.rho() - rho).abs() > 1e-12 * rho.max(1.0) {
        h = h.rescale_rho(rho)?;
    }
    let mut ws = QpWorkspace::build(sd, &h, rho, cfg.sweep_order);
    let mut state = DualIterate::warm_start(sd, &ws, &h, warm_eta);

    let mut stats = SubproblemStats { min_dual_ascent: f64::INFINITY, ..Default::default() };
    let mut trace = Vec::new();
    let mut reductions = 0u64;
    // best (J(d, rho), d_used, zeta) at the current rho, for the cap fallback
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut prev_d_zeta: Option<f64> = None;
    let mut prev_d_lambda: Option<f64> = None;

    let mut sweeps = 0u64;
    let mut terminated: Option<RatioReport> = None;

    loop {
        if sweeps >= cfg.max_sweeps {
            break;
        }
        sweeps += 1;
        sweep(&mut state, rho, &ws, sd, &h, cfg.solve_feasibility_dual);

        let d_zeta_rho = penalty_dual_value(sd, &h, rho, &state.cache_v_zeta, &state.zeta);
        let d_lambda_0 = if cfg.solve_feasibility_dual {
            feasibility_dual_value(sd, &h, &state.cache_v_lambda, &state.lambda)
        } else {
            state.d_best_w
        };
        if let Some(prev) = prev_d_zeta {
            stats.min_dual_ascent = stats.min_dual_ascent.min(d_zeta_rho - prev);
        }
        if let Some(prev) = prev_d_lambda {
            stats.min_dual_ascent = stats.min_dual_ascent.min(d_lambda_0 - prev);
        }
        prev_d_zeta = Some(d_zeta_rho);
        prev_d_lambda = Some(d_lambda_0);

        let d_raw = primal_recover_cached(&state.cache_v_zeta, rho, sd, &h);
        let (d_used, j_d_rho) = sufficient_dual_pair(d_raw, rho, sd, &h);

        // weak duality bookkeeping against the substituted step; gaps are
        // scale-normalized so roundoff on large model values stays comparable
        let j_d_0 = primal_objective_h0(&d_used, sd, &h);
        let scale_0 = 1.0 + j_d_0.abs();
        let scale_rho = 1.0 + j_d_rho.abs();
        stats.max_weak_duality_gap = stats
            .max_weak_duality_gap
            .max((d_lambda_0 - j_d_0) / scale_0)
            .max((d_zeta_rho - j_d_rho) / scale_rho)
            .max((state.d_best_w - j_d_0) / scale_0);

        let duals = DualSnapshot { d_zeta_rho, d_w_0: state.d_best_w };
        let mut report = compute_ratios(&d_used, &state.zeta, &duals, omega, sd, j_d_rho)?;
        let (decision, new_rho) = dust_decide(
            report.r_v,
            report.r_phi,
            report.r_c,
            cfg.beta_v,
            cfg.beta_phi,
            cfg.theta_rho,
            rho,
        );
        report.decision = decision;

        if cfg.trace {
            trace.push(SweepTrace {
                sweep: sweeps,
                rho,
                r_v: report.r_v,
                r_phi: report.r_phi,
                r_c: report.r_c,
                j_d_rho,
                d_zeta_rho,
            });
        }
        match &best {
            Some((j_best, _, _)) if *j_best <= j_d_rho => {}
            _ => best = Some((j_d_rho, d_used.clone(), state.zeta.clone())),
        }

        match decision {
            DustDecision::Terminate => {
                if cfg.shadow_sweeps > 0 {
                    let (reds, clean) =
                        shadow_continuation(sd, &h, rho, omega, &ws, &state, cfg)?;
                    stats.shadow_reductions = reds;
                    stats.shadow_tail_clean = Some(clean);
                }
                terminated = Some(report);
                break;
            }
            DustDecision::ReduceRho => {
                reductions += 1;
                stats.last_reduce_sweep = Some(sweeps);
                rho = new_rho;
                h = h.rescale_rho(rho)?;
                ws.refresh_penalty_side(sd, &h, rho);
                state.refresh_penalty_cache(&ws);
                // dual iterates stay box-feasible across the weight change
                prev_d_zeta = None;
                best = None;
            }
            DustDecision::Continue => {}
        }
    }
    if stats.min_dual_ascent == f64::INFINITY {
        stats.min_dual_ascent = 0.0;
    }

    let cap_hit = terminated.is_none();
    let (d, zeta) = match (&terminated, best) {
        (Some(rep), _) => (rep.d_used.clone(), state.zeta.clone()),
        (None, Some((_, d, z))) => (d, z),
        (None, None) => (DVector::zeros(sd.g.len()), state.zeta.clone()),
    };
    let null_step = d.len() == 0 || d.amax() == 0.0;
    let delta_l0 = sd.j0 - linear_model(&d, 0.0, sd);
    let delta_l_rho = delta_l0 - rho * sd.g.dot(&d);
    let delta_j = delta_l_rho - 0.5 * h.quad_rho(&d);

    Ok((
        SubproblemResult {
            d,
            zeta,
            w: state.best_w.clone(),
            d_w_0: state.d_best_w,
            rho_tilde: rho,
            delta_l0,
            delta_l_rho,
            delta_j,
            inner_iters: sweeps,
            rho_reductions: reductions,
            null_step,
            cap_hit,
            stats,
            trace,
        },
        h,
    ))
}
