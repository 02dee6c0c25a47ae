//! Infeasibility measure, exact penalty function, linearized models and their
//! reductions, and the KKT error measures used for termination.
//!
//! With constraint values `b_i = c_i(x)` and gradients `a^i = grad c_i(x)`
//! frozen at an iterate, the linearized penalty model is
//!
//! ```text
//! l(d, rho) = rho <g, d> + sum_eq |b_i + <a^i, d>| + sum_ineq (b_i + <a^i, d>)_+
//! ```
//!
//! and `J(d, rho) = l(d, rho) + 1/2 <d, H_rho d>`.

use nalgebra::DVector;
use thiserror::Error;

use crate::hessian::HessianModel;
use crate::nlp::{EvalCounters, NlpProblem, ProblemError};

/// One linearized constraint row, with the scaled copies reused by projections
/// and the complementarity measure.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    /// Row index in the original problem (positions of dropped rows stay reserved).
    pub orig_index: usize,
    pub is_equality: bool,
    pub a: DVector<f64>,
    pub b: f64,
    pub norm_a: f64,
    pub a_bar: DVector<f64>,
    pub b_bar: f64,
}

/// Frozen per-iteration linearization of the constraints and objective gradient.
#[derive(Debug, Clone)]
pub struct SubproblemData {
    pub g: DVector<f64>,
    pub rows: Vec<ConstraintRow>,
    /// Number of equality rows among `rows` (they come first).
    pub m_eq: usize,
    /// Row count of the original problem, for scattering multipliers back.
    pub orig_m: usize,
    /// `J(0) = l(0, 0) = v(x)` for the frozen data.
    pub j0: f64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Rows with `norm(a) < this` are degenerate: removable when `|b|` is tiny too.
const ROW_NORM_EPS: f64 = 1e-12;

impl SubproblemData {
    pub fn build(p: &NlpProblem, x: &[f64], counters: &mut EvalCounters) -> Result<Self, ModelError> {
        let g = DVector::from_vec(p.grad_f(x, counters));
        let c = p.c(x, counters);
        let jac = p.jac_c(x, counters);
        Self::from_parts(g, &c, jac, p.m_eq)
    }

    /// Builds from already-evaluated data; rows with a vanishing gradient and a
    /// vanishing value are constant and removable, a vanishing gradient with a
    /// nonzero value is an error (no direction reduces that row's violation).
    pub fn from_parts(
        g: DVector<f64>,
        c: &[f64],
        jac: Vec<Vec<f64>>,
        m_eq: usize,
    ) -> Result<Self, ModelError> {
        let orig_m = c.len();
        let mut rows = Vec::with_capacity(orig_m);
        let mut j0 = 0.0;
        let mut kept_eq = 0;
        for (i, (bi, ai)) in c.iter().zip(jac).enumerate() {
            let is_eq = i < m_eq;
            j0 += if is_eq { bi.abs() } else { bi.max(0.0) };
            let a = DVector::from_vec(ai);
            let norm_a = a.norm();
            if norm_a < ROW_NORM_EPS {
                if bi.abs() < ROW_NORM_EPS {
                    continue;
                }
                return Err(ProblemError::ZeroConstraintGradient { index: i, residual: *bi }.into());
            }
            if is_eq {
                kept_eq += 1;
            }
            rows.push(ConstraintRow {
                orig_index: i,
                is_equality: is_eq,
                a_bar: &a / norm_a,
                b_bar: bi / norm_a,
                a,
                b: *bi,
                norm_a,
            });
        }
        Ok(SubproblemData { g, rows, m_eq: kept_eq, orig_m, j0 })
    }

    /// Scatters per-row multipliers back to the original constraint indexing,
    /// with zeros at dropped rows.
    pub fn scatter_multipliers(&self, mult: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.orig_m);
        for (row, v) in self.rows.iter().zip(mult.iter()) {
            full[row.orig_index] = *v;
        }
        full
    }
}

/// l1 infeasibility and max violation at `x`: equalities contribute `|c_i|`,
/// inequalities their positive part.
pub fn violation(p: &NlpProblem, x: &[f64], counters: &mut EvalCounters) -> (f64, f64) {
    let c = p.c(x, counters);
    violation_of(&c, p.m_eq)
}

/// Same from an already-evaluated constraint vector.
pub fn violation_of(c: &[f64], m_eq: usize) -> (f64, f64) {
    let mut v = 0.0;
    let mut v_inf = 0.0f64;
    for (i, ci) in c.iter().enumerate() {
        let t = if i < m_eq { ci.abs() } else { ci.max(0.0) };
        v += t;
        v_inf = v_inf.max(t);
    }
    (v, v_inf)
}

/// Exact penalty `phi(x, rho) = rho f(x) + v(x)`.
pub fn penalty(p: &NlpProblem, x: &[f64], rho: f64, counters: &mut EvalCounters) -> f64 {
    debug_assert!(rho >= 0.0);
    let f = p.f(x, counters);
    let (v, _) = violation(p, x, counters);
    rho * f + v
}

/// Linearized penalty model `l(d, rho)` over the frozen data.
pub fn linear_model(d: &DVector<f64>, rho: f64, sd: &SubproblemData) -> f64 {
    let mut total = rho * sd.g.dot(d);
    for row in &sd.rows {
        let r = row.b + row.a.dot(d);
        total += if row.is_equality { r.abs() } else { r.max(0.0) };
    }
    total
}

/// Model reductions produced by a step `d` at penalty weight `rho`.
#[derive(Debug, Clone, Copy)]
pub struct Reductions {
    /// `l(0,0) - l(d,0)`: reduction in the linearized infeasibility.
    pub delta_l0: f64,
    /// `l(0,rho) - l(d,rho)`.
    pub delta_l_rho: f64,
    /// `J(0,rho) - J(d,rho) = delta_l_rho - 1/2 <d, H_rho d>`.
    pub delta_j: f64,
}

pub fn reductions(d: &DVector<f64>, rho: f64, sd: &SubproblemData, h: &HessianModel) -> Reductions {
    let delta_l0 = sd.j0 - linear_model(d, 0.0, sd);
    let delta_l_rho = delta_l0 - rho * sd.g.dot(d);
    let delta_j = delta_l_rho - 0.5 * h.quad_rho(d);
    Reductions { delta_l0, delta_l_rho, delta_j }
}

/// Optimality and feasibility KKT errors at `x` for multiplier estimate `eta`.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub v_inf: f64,
    pub eps_opt: f64,
    pub eps_fea: f64,
}

/// `eps_opt = max{ ||grad f + sum eta_i grad c_i||_inf, ||eta o c||_inf }` and
/// the five-term feasibility error with `[.]^+ / [.]^-` the componentwise
/// positive/negative parts and `eta` split into its equality and inequality
/// blocks against all-ones weight vectors.
pub fn kkt_errors(p: &NlpProblem, x: &[f64], eta: &DVector<f64>, counters: &mut EvalCounters) -> KktReport {
    let g = DVector::from_vec(p.grad_f(x, counters));
    let c = p.c(x, counters);
    let jac = p.jac_c(x, counters);
    kkt_errors_from(&g, &c, &jac, p.m_eq, eta)
}

pub fn kkt_errors_from(
    g: &DVector<f64>,
    c: &[f64],
    jac: &[Vec<f64>],
    m_eq: usize,
    eta: &DVector<f64>,
) -> KktReport {
    let n = g.len();
    let m = c.len();
    assert_eq!(eta.len(), m);
    let (_, v_inf) = violation_of(c, m_eq);

    // grad f + J^T eta and J^T eta
    let mut grad_lag = g.clone();
    let mut jt_eta = DVector::zeros(n);
    for (i, row) in jac.iter().enumerate() {
        for j in 0..n {
            jt_eta[j] += eta[i] * row[j];
        }
    }
    for j in 0..n {
        grad_lag[j] += jt_eta[j];
    }

    let mut eps_opt = grad_lag.amax();
    for i in 0..m {
        eps_opt = eps_opt.max((eta[i] * c[i]).abs());
    }

    let mut eps_fea: f64 = jt_eta.amax();
    for i in 0..m {
        let plus = c[i].max(0.0);
        let minus = c[i].min(0.0);
        if i < m_eq {
            eps_fea = eps_fea.max(((1.0 - eta[i]) * plus).abs());
            eps_fea = eps_fea.max(((1.0 + eta[i]) * minus).abs());
        } else {
            eps_fea = eps_fea.max(((1.0 - eta[i]) * plus).abs());
            eps_fea = eps_fea.max((eta[i] * minus).abs());
        }
    }

    KktReport { v_inf, eps_opt, eps_fea }
}
