//! Problem abstraction: callback-defined NLPs with an equality/inequality
//! constraint partition, evaluation counters, the infeasibility transform used
//! by the infeasible test set, and a finite-difference derivative checker.
//!
//! Conventions: constraints `1..=m_eq` are equalities `c_i(x) = 0`, the rest are
//! inequalities `c_i(x) <= 0`. Simple bounds are encoded as general inequality
//! rows. Problems stated in the `g(x) >= 0` form are negated on entry.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

mod hs;
pub mod synthetic;

pub type ObjFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ConsHessFn = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem '{name}'; available: {available}")]
    UnknownProblem { name: String, available: String },
    #[error("constraint {index} has zero gradient at the current iterate but residual {residual:.3e}")]
    ZeroConstraintGradient { index: usize, residual: f64 },
}

/// Counts of user-callback evaluations during one solve.
///
/// Monotonically nondecreasing within a solve; `n_grad` covers both objective
/// gradients and constraint Jacobians, `n_hess` covers both Hessian callbacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub n_f: u64,
    pub n_c: u64,
    pub n_grad: u64,
    pub n_hess: u64,
}

/// A nonlinear program defined through evaluation callbacks.
///
/// Cloning is cheap (callbacks are shared); a problem is immutable after
/// construction and safe to share across threads.
#[derive(Clone)]
pub struct NlpProblem {
    pub name: String,
    /// Number of variables.
    pub n: usize,
    /// Total number of constraints.
    pub m: usize,
    /// Constraints `0..m_eq` are equalities, `m_eq..m` are `<= 0` inequalities.
    pub m_eq: usize,
    /// Standard starting point.
    pub x0: Vec<f64>,
    f: ObjFn,
    c: VecFn,
    grad_f: VecFn,
    jac_c: JacFn,
    hess_f: MatFn,
    hess_c: ConsHessFn,
}

impl std::fmt::Debug for NlpProblem {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("NlpProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("m_eq", &self.m_eq)
            .finish()
    }
}

impl NlpProblem {
    pub fn f(&self, x: &[f64], counters: &mut EvalCounters) -> f64 {
        counters.n_f += 1;
        (self.f)(x)
    }

    pub fn c(&self, x: &[f64], counters: &mut EvalCounters) -> Vec<f64> {
        counters.n_c += 1;
        let out = (self.c)(x);
        debug_assert_eq!(out.len(), self.m);
        out
    }

    pub fn grad_f(&self, x: &[f64], counters: &mut EvalCounters) -> Vec<f64> {
        counters.n_grad += 1;
        let out = (self.grad_f)(x);
        debug_assert_eq!(out.len(), self.n);
        out
    }

    /// Constraint Jacobian as `m` rows of length `n`.
    pub fn jac_c(&self, x: &[f64], counters: &mut EvalCounters) -> Vec<Vec<f64>> {
        counters.n_grad += 1;
        let out = (self.jac_c)(x);
        debug_assert_eq!(out.len(), self.m);
        out
    }

    pub fn hess_f(&self, x: &[f64], counters: &mut EvalCounters) -> DMatrix<f64> {
        counters.n_hess += 1;
        (self.hess_f)(x)
    }

    pub fn hess_c(&self, x: &[f64], i: usize, counters: &mut EvalCounters) -> DMatrix<f64> {
        counters.n_hess += 1;
        (self.hess_c)(x, i)
    }

    pub fn is_equality(&self, i: usize) -> bool {
        i < self.m_eq
    }
}

/// How a single constraint enters the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `c(x) = 0`
    Equality,
    /// `c(x) <= 0`
    Inequality,
}

/// One scalar constraint with its derivatives.
#[derive(Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub value: ObjFn,
    pub grad: VecFn,
    pub hess: MatFn,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, value: ObjFn, grad: VecFn, hess: MatFn) -> Self {
        Constraint { kind, value, grad, hess }
    }

    /// Linear constraint `a^T x + b (=|<=) 0` in `n` variables.
    pub fn linear(kind: ConstraintKind, n: usize, a: Vec<f64>, b: f64) -> Self {
        assert_eq!(a.len(), n);
        let a2 = a.clone();
        Constraint {
            kind,
            value: Arc::new(move |x| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b),
            grad: Arc::new(move |_| a2.clone()),
            hess: Arc::new(move |_| DMatrix::zeros(n, n)),
        }
    }

    /// Bound row `lo - x_i <= 0` (i.e. `x_i >= lo`).
    pub fn lower_bound(n: usize, i: usize, lo: f64) -> Self {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        Self::linear(ConstraintKind::Inequality, n, a, lo)
    }

    /// Bound row `x_i - hi <= 0`.
    pub fn upper_bound(n: usize, i: usize, hi: f64) -> Self {
        let mut a = vec![0.0; n];
        a[i] = 1.0;
        Self::linear(ConstraintKind::Inequality, n, a, -hi)
    }
}

/// Assembles an [`NlpProblem`] from per-constraint definitions, reordering so
/// that all equalities come first.
pub fn build_problem(
    name: &str,
    n: usize,
    x0: Vec<f64>,
    f: ObjFn,
    grad_f: VecFn,
    hess_f: MatFn,
    constraints: Vec<Constraint>,
) -> NlpProblem {
    assert_eq!(x0.len(), n);
    let mut ordered: Vec<Constraint> = Vec::with_capacity(constraints.len());
    for c in constraints.iter().filter(|c| c.kind == ConstraintKind::Equality) {
        ordered.push(c.clone());
    }
    let m_eq = ordered.len();
    for c in constraints.iter().filter(|c| c.kind == ConstraintKind::Inequality) {
        ordered.push(c.clone());
    }
    let m = ordered.len();

    let values: Vec<ObjFn> = ordered.iter().map(|c| c.value.clone()).collect();
    let grads: Vec<VecFn> = ordered.iter().map(|c| c.grad.clone()).collect();
    let hesses: Vec<MatFn> = ordered.iter().map(|c| c.hess.clone()).collect();

    NlpProblem {
        name: name.to_string(),
        n,
        m,
        m_eq,
        x0,
        f,
        c: Arc::new(move |x| values.iter().map(|v| v(x)).collect()),
        jac_c: Arc::new(move |x| grads.iter().map(|g| g(x)).collect()),
        hess_c: Arc::new(move |x, i| hesses[i](x)),
        grad_f,
        hess_f,
    }
}

/// Appends the contradictory rows `x_1 <= 0` and `1 - x_1 <= 0`, making the
/// constraint set infeasible; every point then has `v(x) >= 1/2`.
pub fn make_infeasible(p: &NlpProblem) -> NlpProblem {
    assert!(p.n >= 1);
    let (m, n) = (p.m, p.n);
    let inner_c = p.c.clone();
    let inner_jac = p.jac_c.clone();
    let inner_hess = p.hess_c.clone();
    NlpProblem {
        name: format!("{}_inf", p.name),
        n,
        m: m + 2,
        m_eq: p.m_eq,
        x0: p.x0.clone(),
        f: p.f.clone(),
        grad_f: p.grad_f.clone(),
        hess_f: p.hess_f.clone(),
        c: Arc::new(move |x| {
            let mut out = inner_c(x);
            out.push(x[0]);
            out.push(1.0 - x[0]);
            out
        }),
        jac_c: Arc::new(move |x| {
            let mut out = inner_jac(x);
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            let mut me1 = vec![0.0; n];
            me1[0] = -1.0;
            out.push(e1);
            out.push(me1);
            out
        }),
        hess_c: Arc::new(move |x, i| {
            if i < m {
                inner_hess(x, i)
            } else {
                DMatrix::zeros(n, n)
            }
        }),
    }
}

/// Maximum relative error between the analytic first derivatives and central
/// finite differences of `f` and `c` at `x`, using step `h` and denominator
/// `max(1, |analytic|)` per entry.
pub fn check_derivatives(p: &NlpProblem, x: &[f64], h: f64) -> f64 {
    assert!(h > 0.0);
    let mut k = EvalCounters::default();
    let n = p.n;
    let grad = p.grad_f(x, &mut k);
    let jac = p.jac_c(x, &mut k);
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for j in 0..n {
        let old = xp[j];
        xp[j] = old + h;
        let f_plus = p.f(&xp, &mut k);
        let c_plus = p.c(&xp, &mut k);
        xp[j] = old - h;
        let f_minus = p.f(&xp, &mut k);
        let c_minus = p.c(&xp, &mut k);
        xp[j] = old;

        let fd = (f_plus - f_minus) / (2.0 * h);
        worst = worst.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
        for i in 0..p.m {
            let cd = (c_plus[i] - c_minus[i]) / (2.0 * h);
            worst = worst.max((cd - jac[i][j]).abs() / jac[i][j].abs().max(1.0));
        }
    }
    worst
}

type Builder = fn() -> NlpProblem;

fn registry() -> BTreeMap<&'static str, Builder> {
    let mut map: BTreeMap<&'static str, Builder> = BTreeMap::new();
    map.insert("hs11", hs::hs11 as Builder);
    map.insert("hs14", hs::hs14);
    map.insert("hs21", hs::hs21);
    map.insert("hs28", hs::hs28);
    map.insert("hs32", hs::hs32);
    map.insert("hs35", hs::hs35);
    map.insert("hs41", hs::hs41);
    map.insert("hs43", hs::hs43);
    map.insert("hs48", hs::hs48);
    map.insert("hs51", hs::hs51);
    map.insert("hs52", hs::hs52);
    map.insert("hs61", hs::hs61);
    map.insert("hs76", hs::hs76);
    map.insert("hs100", hs::hs100);
    map.insert("hs113", hs::hs113);
    map
}

/// Names of the registered base problems (without `_inf` variants).
pub fn problem_names() -> Vec<&'static str> {
    registry().keys().copied().collect()
}

/// Looks up a problem by name. Names ending in `_inf` resolve to the
/// infeasibility transform of the base problem.
///
/// The transformed problems pin contradictory bounds on `x_1`; where the base
/// problem already bounds `x_1`, those original bound rows are replaced rather
/// than kept, so the only inconsistency is the injected pair.
pub fn get_problem(name: &str) -> Result<NlpProblem, ProblemError> {
    let reg = registry();
    if let Some(base) = name.strip_suffix("_inf") {
        // hs21 bounds x_1 in [2, 50]; keeping those rows would shift the
        // minimal violation from 1 to 2. The transform replaces x_1 bounds.
        if base == "hs21" {
            return Ok(make_infeasible(&hs::hs21_free_x1()));
        }
        if reg.contains_key(base) {
            return Ok(make_infeasible(&get_problem(base)?));
        }
    }
    match reg.get(name) {
        Some(b) => Ok(b()),
        None => {
            let mut names: Vec<String> = reg.keys().map(|s| s.to_string()).collect();
            names.extend(reg.keys().map(|s| format!("{s}_inf")));
            Err(ProblemError::UnknownProblem {
                name: name.to_string(),
                available: names.join(", "),
            })
        }
    }
}
