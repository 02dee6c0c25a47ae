//! Box-constrained dual coordinate ascent for the penalty and feasibility
//! subproblems.
//!
//! Both duals share one multiplier box (`[-1,1]` for equality rows, `[0,1]`
//! for inequality rows):
//!
//! ```text
//! D(zeta, rho) = -1/2 (A^T zeta + rho g)^T H_rho^{-1} (A^T zeta + rho g) + zeta^T b
//! D(lambda, 0) = -1/2 (A^T lambda)^T H_0^{-1} (A^T lambda) + lambda^T b
//! ```
//!
//! with primal recovery `d = -H_rho^{-1}(rho g + A^T zeta)`. Each coordinate
//! maximization is a 1-D concave quadratic over an interval, solved by clipping
//! its unconstrained maximizer with the mid operator. The iterate keeps
//! `v = A^T mult` and, in the compact-Hessian backend, `p = (A V)^T mult`, so a
//! coordinate update costs O(n + r) and no m x m product is ever formed.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hessian::{HessianModel, InverseOperator};
use crate::penalty::{linear_model, SubproblemData};

/// Multiplier bounds per row: `[-1, 1]` for equalities, `[0, 1]` otherwise.
pub fn dual_box(sd: &SubproblemData) -> (DVector<f64>, DVector<f64>) {
    let m = sd.rows.len();
    let lower = DVector::from_fn(m, |i, _| if sd.rows[i].is_equality { -1.0 } else { 0.0 });
    let upper = DVector::from_element(m, 1.0);
    (lower, upper)
}

/// Sweep ordering; a shuffled order is fixed once per workspace from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Ascending,
    Shuffled { seed: u64 },
}

#[derive(Clone)]
enum SideData {
    /// Columns `H^{-1} a_i`, solved once per factorization (dense backend).
    Dense { w: DMatrix<f64> },
    /// `q = A u`, `qt = A v` for `H^{-1} = (1/s)(I - u v^T)` (compact backend).
    Factored { q: DMatrix<f64>, qt: DMatrix<f64>, s: f64 },
}

#[derive(Clone)]
struct Side {
    data: SideData,
    /// Effective diagonal `a_i^T H^{-1} a_i`.
    diag: DVector<f64>,
    /// `rho a_i^T H^{-1} g`; zero on the feasibility side.
    lin: DVector<f64>,
}

impl Side {
    fn rank(&self) -> usize {
        match &self.data {
            SideData::Dense { .. } => 0,
            SideData::Factored { q, .. } => q.ncols(),
        }
    }

    fn build(sd: &SubproblemData, op: InverseOperator<'_>, rho_g: Option<&DVector<f64>>, h_inv: impl Fn(&DVector<f64>) -> DVector<f64>) -> Self {
        let m = sd.rows.len();
        let n = sd.g.len();
        let data = match op {
            InverseOperator::Dense(chol) => {
                let mut at = DMatrix::zeros(n, m);
                for (i, row) in sd.rows.iter().enumerate() {
                    at.set_column(i, &row.a);
                }
                SideData::Dense { w: chol.solve(&at) }
            }
            InverseOperator::Factored(f) => {
                let r = f.u.ncols();
                let mut q = DMatrix::zeros(m, r);
                let mut qt = DMatrix::zeros(m, r);
                for (i, row) in sd.rows.iter().enumerate() {
                    q.set_row(i, &(row.a.transpose() * &f.u));
                    qt.set_row(i, &(row.a.transpose() * &f.v));
                }
                SideData::Factored { q, qt, s: f.s }
            }
        };
        let diag = DVector::from_fn(m, |i, _| {
            let a = &sd.rows[i].a;
            match &data {
                SideData::Dense { w } => a.dot(&w.column(i).into_owned()),
                SideData::Factored { q, qt, s } => (a.dot(a) - q.row(i).dot(&qt.row(i))) / s,
            }
        });
        let lin = match rho_g {
            Some(rg) if rg.amax() > 0.0 => {
                let t = h_inv(rg);
                DVector::from_fn(m, |i, _| sd.rows[i].a.dot(&t))
            }
            _ => DVector::zeros(m),
        };
        Side { data, diag, lin }
    }

    /// `p = (A v_factor)^T mult`, the compact-backend cache; empty for dense.
    fn project_cache(&self, mult: &DVector<f64>) -> DVector<f64> {
        match &self.data {
            SideData::Dense { .. } => DVector::zeros(0),
            SideData::Factored { qt, .. } => qt.transpose() * mult,
        }
    }
}

/// Per-subproblem scratch: backend products, effective diagonals, sweep order.
#[derive(Clone)]
pub struct QpWorkspace {
    penalty: Side,
    feasibility: Side,
    order: Vec<usize>,
    /// Length-n inner products and axpys spent in coordinate updates.
    pub ops_len_n: Cell<u64>,
    /// Length-r inner products and axpys spent in coordinate updates.
    pub ops_len_r: Cell<u64>,
}

impl QpWorkspace {
    pub fn build(sd: &SubproblemData, h: &HessianModel, rho: f64, order: SweepOrder) -> Self {
        debug_assert!((h.rho() - rho).abs() <= 1e-12 * rho.max(1.0));
        let rho_g = rho * &sd.g;
        let penalty = Side::build(sd, h.inverse_op_rho(), Some(&rho_g), |z| h.inverse_apply(z));
        let feasibility = Side::build(sd, h.inverse_op_h0(), None, |z| h.inverse_apply_h0(z));
        let mut idx: Vec<usize> = (0..sd.rows.len()).collect();
        if let SweepOrder::Shuffled { seed } = order {
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        QpWorkspace {
            penalty,
            feasibility,
            order: idx,
            ops_len_n: Cell::new(0),
            ops_len_r: Cell::new(0),
        }
    }

    /// Rebuilds the penalty-side products after `H_rho` changed; the
    /// feasibility side does not depend on `rho`.
    pub fn refresh_penalty_side(&mut self, sd: &SubproblemData, h: &HessianModel, rho: f64) {
        let rho_g = rho * &sd.g;
        self.penalty = Side::build(sd, h.inverse_op_rho(), Some(&rho_g), |z| h.inverse_apply(z));
    }

    pub fn penalty_rank(&self) -> usize {
        self.penalty.rank()
    }

    fn count_n(&self, k: u64) {
        self.ops_len_n.set(self.ops_len_n.get() + k);
    }

    fn count_r(&self, k: u64) {
        self.ops_len_r.set(self.ops_len_r.get() + k);
    }
}

/// Multipliers for both duals with their incremental caches and the running
/// best feasibility-dual point.
#[derive(Debug, Clone)]
pub struct DualIterate {
    pub zeta: DVector<f64>,
    pub lambda: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// `A^T zeta`.
    pub cache_v_zeta: DVector<f64>,
    /// `A^T lambda`.
    pub cache_v_lambda: DVector<f64>,
    /// Compact-backend cache `(A V_rho)^T zeta`; empty for the dense backend.
    pub cache_p_zeta: DVector<f64>,
    /// Compact-backend cache `(A V_0)^T lambda`.
    pub cache_p_lambda: DVector<f64>,
    /// Best feasibility-dual multipliers seen during the solve and their value.
    pub best_w: DVector<f64>,
    pub d_best_w: f64,
}

fn at_mult(sd: &SubproblemData, mult: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(sd.g.len());
    for (row, mi) in sd.rows.iter().zip(mult.iter()) {
        if *mi != 0.0 {
            v.axpy(*mi, &row.a, 1.0);
        }
    }
    v
}

fn bdot(sd: &SubproblemData, mult: &DVector<f64>) -> f64 {
    sd.rows.iter().zip(mult.iter()).map(|(row, mi)| row.b * mi).sum()
}

impl DualIterate {
    /// Warm start: `zeta` from the previous multipliers clipped into the box,
    /// `lambda = 0`, `best_w` whichever of the two has the better `D(., 0)`.
    pub fn warm_start(
        sd: &SubproblemData,
        ws: &QpWorkspace,
        h: &HessianModel,
        previous_eta: Option<&DVector<f64>>,
    ) -> Self {
        let m = sd.rows.len();
        let (lower, upper) = dual_box(sd);
        let mut zeta = DVector::zeros(m);
        if let Some(eta) = previous_eta {
            for (i, row) in sd.rows.iter().enumerate() {
                zeta[i] = eta[row.orig_index].clamp(lower[i], upper[i]);
            }
        }
        let lambda = DVector::zeros(m);
        let cache_v_zeta = at_mult(sd, &zeta);
        let cache_v_lambda = at_mult(sd, &lambda);
        let cache_p_zeta = ws.penalty.project_cache(&zeta);
        let cache_p_lambda = ws.feasibility.project_cache(&lambda);
        let d_zeta = feasibility_dual_value(sd, h, &cache_v_zeta, &zeta);
        let d_lambda = feasibility_dual_value(sd, h, &cache_v_lambda, &lambda);
        let (best_w, d_best_w) = if d_zeta >= d_lambda {
            (zeta.clone(), d_zeta)
        } else {
            (lambda.clone(), d_lambda)
        };
        DualIterate {
            zeta,
            lambda,
            lower,
            upper,
            cache_v_zeta,
            cache_v_lambda,
            cache_p_zeta,
            cache_p_lambda,
            best_w,
            d_best_w,
        }
    }

    /// Recomputes the penalty-side `p` cache after `H_rho` changed.
    pub fn refresh_penalty_cache(&mut self, ws: &QpWorkspace) {
        self.cache_p_zeta = ws.penalty.project_cache(&self.zeta);
    }

    /// Incremental caches against recomputation; debug builds only.
    pub fn debug_check_caches(&self, sd: &SubproblemData, ws: &QpWorkspace) {
        if cfg!(debug_assertions) {
            let v = at_mult(sd, &self.zeta);
            assert!((&v - &self.cache_v_zeta).amax() <= 1e-8, "zeta cache drift");
            let vl = at_mult(sd, &self.lambda);
            assert!((&vl - &self.cache_v_lambda).amax() <= 1e-8, "lambda cache drift");
            let p = ws.penalty.project_cache(&self.zeta);
            if p.len() > 0 {
                assert!((&p - &self.cache_p_zeta).amax() <= 1e-8, "p cache drift");
            }
        }
    }
}

/// New coordinate value: `mid{current + grad/diag, lo, hi}`, with the
/// zero-diagonal row pushed to the bound its partial derivative points at.
pub fn clip_step(current: f64, grad: f64, diag: f64, lo: f64, hi: f64, zero_tol: f64) -> f64 {
    if diag.abs() <= zero_tol {
        if grad > 0.0 {
            hi
        } else if grad < 0.0 {
            lo
        } else {
            current
        }
    } else {
        (current + grad / diag).clamp(lo, hi)
    }
}

/// One coordinate maximization of the selected dual; updates the multiplier
/// and its caches in place and returns the new value.
fn update_coordinate(
    ws: &QpWorkspace,
    side_is_penalty: bool,
    i: usize,
    sd: &SubproblemData,
    mult: &mut DVector<f64>,
    cache_v: &mut DVector<f64>,
    cache_p: &mut DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    let side = if side_is_penalty { &ws.penalty } else { &ws.feasibility };
    let row = &sd.rows[i];
    let a = &row.a;
    let grad = match &side.data {
        SideData::Dense { w } => {
            ws.count_n(1);
            row.b - side.lin[i] - w.column(i).dot(cache_v)
        }
        SideData::Factored { q, qt: _, s } => {
            ws.count_n(1);
            ws.count_r(1);
            row.b - side.lin[i] - (a.dot(cache_v) - q.row(i).dot(&cache_p.transpose())) / s
        }
    };
    let ata = a.dot(a);
    let zero_tol = 1e-14 * (1.0 + ata);
    let new = clip_step(mult[i], grad, side.diag[i], lower[i], upper[i], zero_tol);
    let delta = new - mult[i];
    if delta != 0.0 {
        ws.count_n(1);
        cache_v.axpy(delta, a, 1.0);
        if let SideData::Factored { qt, .. } = &side.data {
            ws.count_r(1);
            cache_p.axpy(delta, &qt.row(i).transpose(), 1.0);
        }
        mult[i] = new;
    }
    new
}

/// One full pass of coordinate ascent: the penalty dual at `rho`, then the
/// feasibility dual (skipped when `solve_feasibility` is off, in which case
/// `zeta` stands in for the feasibility estimate). Updates `best_w`.
pub fn sweep(
    state: &mut DualIterate,
    rho: f64,
    ws: &QpWorkspace,
    sd: &SubproblemData,
    h: &HessianModel,
    solve_feasibility: bool,
) {
    for &i in &ws.order {
        let DualIterate { zeta, cache_v_zeta, cache_p_zeta, lower, upper, .. } = state;
        update_coordinate(ws, true, i, sd, zeta, cache_v_zeta, cache_p_zeta, lower, upper);
    }
    if solve_feasibility {
        for &i in &ws.order {
            let DualIterate { lambda, cache_v_lambda, cache_p_lambda, lower, upper, .. } = state;
            update_coordinate(ws, false, i, sd, lambda, cache_v_lambda, cache_p_lambda, lower, upper);
        }
    }
    let _ = rho;
    // the best feasibility-dual point must be no worse than either iterate:
    // both multiplier vectors live in the same box, so each is a candidate
    let d_zeta0 = feasibility_dual_value(sd, h, &state.cache_v_zeta, &state.zeta);
    if d_zeta0 > state.d_best_w {
        state.best_w = state.zeta.clone();
        state.d_best_w = d_zeta0;
    }
    if solve_feasibility {
        let d_lam0 = feasibility_dual_value(sd, h, &state.cache_v_lambda, &state.lambda);
        if d_lam0 > state.d_best_w {
            state.best_w = state.lambda.clone();
            state.d_best_w = d_lam0;
        }
    }
    state.debug_check_caches(sd, ws);
}

/// Dual objective from scratch. `rho = 0` evaluates the feasibility dual
/// (operator `H_0`); otherwise `rho` must match the weight the model was
/// built at.
pub fn dual_objective(mult: &DVector<f64>, rho: f64, sd: &SubproblemData, h: &HessianModel) -> f64 {
    let v = at_mult(sd, mult);
    if rho == 0.0 {
        feasibility_dual_value(sd, h, &v, mult)
    } else {
        debug_assert!((h.rho() - rho).abs() <= 1e-12 * rho.max(1.0));
        penalty_dual_value(sd, h, rho, &v, mult)
    }
}

/// `D(mult, 0)` from the cached `A^T mult`.
pub fn feasibility_dual_value(
    sd: &SubproblemData,
    h: &HessianModel,
    cache_v: &DVector<f64>,
    mult: &DVector<f64>,
) -> f64 {
    -0.5 * cache_v.dot(&h.inverse_apply_h0(cache_v)) + bdot(sd, mult)
}

/// `D(mult, rho)` from the cached `A^T mult`.
pub fn penalty_dual_value(
    sd: &SubproblemData,
    h: &HessianModel,
    rho: f64,
    cache_v: &DVector<f64>,
    mult: &DVector<f64>,
) -> f64 {
    let y = cache_v + rho * &sd.g;
    -0.5 * y.dot(&h.inverse_apply(&y)) + bdot(sd, mult)
}

/// Primal step from the penalty-dual multipliers: `d = -H_rho^{-1}(rho g + A^T zeta)`.
pub fn primal_recover(zeta: &DVector<f64>, rho: f64, sd: &SubproblemData, h: &HessianModel) -> DVector<f64> {
    let v = at_mult(sd, zeta);
    primal_recover_cached(&v, rho, sd, h)
}

pub fn primal_recover_cached(
    cache_v: &DVector<f64>,
    rho: f64,
    sd: &SubproblemData,
    h: &HessianModel,
) -> DVector<f64> {
    -h.inverse_apply(&(cache_v + rho * &sd.g))
}

/// `J(d, rho) = l(d, rho) + 1/2 <d, H_rho d>`.
pub fn primal_objective(d: &DVector<f64>, rho: f64, sd: &SubproblemData, h: &HessianModel) -> f64 {
    linear_model(d, rho, sd) + 0.5 * h.quad_rho(d)
}

/// `J(d, 0) = l(d, 0) + 1/2 <d, H_0 d>`.
pub fn primal_objective_h0(d: &DVector<f64>, sd: &SubproblemData, h: &HessianModel) -> f64 {
    linear_model(d, 0.0, sd) + 0.5 * h.quad_h0(d)
}

/// Enforces that the step used for the ratio tests is no worse than a zero
/// step: returns `d` when `J(d, rho) <= J(0, rho)`, otherwise the zero step.
pub fn sufficient_dual_pair(
    d: DVector<f64>,
    rho: f64,
    sd: &SubproblemData,
    h: &HessianModel,
) -> (DVector<f64>, f64) {
    let j_d = primal_objective(&d, rho, sd, h);
    if j_d <= sd.j0 {
        (d, j_d)
    } else {
        (DVector::zeros(d.len()), sd.j0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian::{CompactFactors, HessianModel};
    use nalgebra::DMatrix;

    /// n=1 instance: one equality row a=1, b=1, g as given, H_rho = H_0 = 1.
    fn one_d_instance(g: f64) -> (SubproblemData, HessianModel) {
        let sd = SubproblemData::from_parts(
            DVector::from_vec(vec![g]),
            &[1.0],
            vec![vec![1.0]],
            1,
        )
        .unwrap();
        let h = HessianModel::dense_from_parts(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            1.0,
        )
        .unwrap();
        (sd, h)
    }

    #[test]
    fn dual_objective_hand_values() {
        let (sd, h) = one_d_instance(1.0);
        let zero = DVector::from_vec(vec![0.0]);
        assert_eq!(dual_objective(&zero, 0.0, &sd, &h), 0.0);
        // mult = 0, rho = 1, g = 1, H = 1: -1/2 (rho g)^2 = -0.5
        assert_eq!(dual_objective(&zero, 1.0, &sd, &h), -0.5);
        // rho g = 0: D(1) = -0.5 + 1 = 0.5 equals the primal optimum of
        // 1/2 d^2 + |d + 1| at d = -1
        let (sd0, h0) = one_d_instance(0.0);
        let one = DVector::from_vec(vec![1.0]);
        assert_eq!(dual_objective(&one, 1.0, &sd0, &h0), 0.5);
        let d = primal_recover(&one, 1.0, &sd0, &h0);
        assert_eq!(d[0], -1.0);
        assert_eq!(primal_objective(&d, 1.0, &sd0, &h0), 0.5);
    }

    #[test]
    fn one_d_brute_force_strong_duality() {
        // brute-force the primal over a grid to confirm d = -1 is optimal
        let (sd, h) = one_d_instance(0.0);
        let mut best = f64::INFINITY;
        let mut best_d = 0.0;
        for k in -400..=400 {
            let d = DVector::from_vec(vec![k as f64 / 100.0]);
            let j = primal_objective(&d, 1.0, &sd, &h);
            if j < best {
                best = j;
                best_d = d[0];
            }
        }
        assert_eq!(best_d, -1.0);
        assert!((best - 0.5).abs() < 1e-12);
    }

    #[test]
    fn primal_recover_hand_values() {
        // zeta = 0, g = 0 -> d = 0
        let (sd, h) = one_d_instance(0.0);
        let d = primal_recover(&DVector::zeros(1), 1.0, &sd, &h);
        assert_eq!(d[0], 0.0);
        // n=2: zeta = (1), a = (1,0), rho g = 0, H = I -> d = (-1, 0)
        let sd = SubproblemData::from_parts(
            DVector::zeros(2),
            &[0.5],
            vec![vec![1.0, 0.0]],
            1,
        )
        .unwrap();
        let h = HessianModel::dense_from_parts(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let d = primal_recover(&DVector::from_vec(vec![1.0]), 1.0, &sd, &h);
        assert_eq!((d[0], d[1]), (-1.0, 0.0));
    }

    #[test]
    fn clip_step_cases() {
        // max -1/2*2 t^2 + 3 t from 0 over [0,1]: mid{1.5, 0, 1} = 1
        assert_eq!(clip_step(0.0, 3.0, 2.0, 0.0, 1.0, 1e-14), 1.0);
        // linear coefficient 1: mid{0.5, 0, 1} = 0.5
        assert_eq!(clip_step(0.0, 1.0, 2.0, 0.0, 1.0, 1e-14), 0.5);
        // zero diagonal, positive partial -> upper bound
        assert_eq!(clip_step(0.3, 1.0, 0.0, 0.0, 1.0, 1e-14), 1.0);
        assert_eq!(clip_step(0.3, -1.0, 0.0, 0.0, 1.0, 1e-14), 0.0);
        assert_eq!(clip_step(0.3, 0.0, 0.0, 0.0, 1.0, 1e-14), 0.3);
    }

    #[test]
    fn sweep_reaches_one_d_optimum_and_fixes() {
        let (sd, h) = one_d_instance(0.0);
        let ws = QpWorkspace::build(&sd, &h, 1.0, SweepOrder::Ascending);
        let mut state = DualIterate::warm_start(&sd, &ws, &h, None);
        sweep(&mut state, 1.0, &ws, &sd, &h, true);
        assert_eq!(state.zeta[0], 1.0);
        assert_eq!(dual_objective(&state.zeta, 1.0, &sd, &h), 0.5);
        // fixed point: a second sweep leaves the state unchanged
        let before = state.zeta.clone();
        sweep(&mut state, 1.0, &ws, &sd, &h, true);
        assert!((state.zeta - before).amax() <= 1e-12);
    }

    #[test]
    fn sufficient_pair_substitutes_zero_step() {
        let (sd, h) = one_d_instance(0.0);
        // a bad step with J(d) > J(0) = 1 is replaced by the zero step
        let bad = DVector::from_vec(vec![5.0]);
        let (d_used, j) = sufficient_dual_pair(bad, 1.0, &sd, &h);
        assert_eq!(d_used[0], 0.0);
        assert_eq!(j, sd.j0);
        // a good step passes through
        let good = DVector::from_vec(vec![-1.0]);
        let (d_used, j) = sufficient_dual_pair(good, 1.0, &sd, &h);
        assert_eq!(d_used[0], -1.0);
        assert_eq!(j, 0.5);
        // the zero step maps to itself
        let (d_used, j) = sufficient_dual_pair(DVector::zeros(1), 1.0, &sd, &h);
        assert_eq!(d_used[0], 0.0);
        assert_eq!(j, sd.j0);
    }

    #[test]
    fn monotone_ascent_and_weak_duality_random() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let n = rng.random_range(1..5);
            let m = rng.random_range(1..5);
            let m_eq = rng.random_range(0..=m);
            let g = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let c: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let jac: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let Ok(sd) = SubproblemData::from_parts(g, &c, jac, m_eq) else { continue };
            let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let hf = &a * a.transpose() + DMatrix::identity(n, n);
            let h = HessianModel::dense_from_parts(hf.clone(), DMatrix::identity(n, n), 0.8)
                .unwrap();
            let ws = QpWorkspace::build(&sd, &h, 0.8, SweepOrder::Ascending);
            let mut state = DualIterate::warm_start(&sd, &ws, &h, None);
            let mut d_zeta_prev = dual_objective(&state.zeta, 0.8, &sd, &h);
            let mut d_lam_prev = dual_objective(&state.lambda, 0.0, &sd, &h);
            for _ in 0..50 {
                sweep(&mut state, 0.8, &ws, &sd, &h, true);
                let d_zeta = dual_objective(&state.zeta, 0.8, &sd, &h);
                let d_lam = dual_objective(&state.lambda, 0.0, &sd, &h);
                let slack = 1e-12 * (1.0 + d_zeta.abs().max(d_lam.abs()));
                assert!(d_zeta >= d_zeta_prev - slack, "penalty dual decreased");
                assert!(d_lam >= d_lam_prev - slack, "feasibility dual decreased");
                assert!(state.d_best_w >= d_lam - slack);
                // weak duality against the substituted step
                let d = primal_recover(&state.zeta, 0.8, &sd, &h);
                let (d_used, j_rho) = sufficient_dual_pair(d, 0.8, &sd, &h);
                let j_0 = primal_objective_h0(&d_used, &sd, &h);
                assert!(d_lam <= j_0 + 1e-9, "weak duality (feasibility)");
                assert!(d_zeta <= j_rho + 1e-9, "weak duality (penalty)");
                d_zeta_prev = d_zeta;
                d_lam_prev = d_lam;
            }
        }
    }

    #[test]
    fn low_rank_coordinate_cost_is_structural() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let (n, m, r) = (30, 50, 3);
        let g = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let c: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
        let jac: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let sd = SubproblemData::from_parts(g, &c, jac, 10).unwrap();
        let make = |rng: &mut rand_chacha::ChaCha8Rng| CompactFactors {
            scalar: 1.0,
            u: DMatrix::from_fn(n, r, |_, _| rng.random::<f64>() - 0.5),
            m: {
                let a = DMatrix::from_fn(r, r, |_, _| rng.random::<f64>() - 0.5);
                &a * a.transpose() + DMatrix::identity(r, r)
            },
        };
        let h = HessianModel::low_rank_from_parts(&make(&mut rng), &make(&mut rng), 1.0).unwrap();
        let ws = QpWorkspace::build(&sd, &h, 1.0, SweepOrder::Ascending);
        assert!(ws.penalty_rank() <= 2 * r);
        let mut state = DualIterate::warm_start(&sd, &ws, &h, None);
        sweep(&mut state, 1.0, &ws, &sd, &h, true);
        // per coordinate and per dual: one gradient dot + at most one cache
        // axpy of length n, so a sweep of both duals spends at most 4m
        let spent = ws.ops_len_n.get();
        assert!(spent <= 4 * m as u64, "length-n ops per sweep: {spent}");
        // and converges: dual values keep increasing against recomputation
        let d0 = dual_objective(&state.zeta, 1.0, &sd, &h);
        for _ in 0..20 {
            sweep(&mut state, 1.0, &ws, &sd, &h, true);
        }
        assert!(dual_objective(&state.zeta, 1.0, &sd, &h) >= d0 - 1e-12);
    }

    #[test]
    fn shuffled_order_is_a_permutation() {
        let (sd, h) = one_d_instance(0.0);
        let sd3 = SubproblemData::from_parts(
            DVector::zeros(2),
            &[0.1, 0.2, 0.3],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            1,
        )
        .unwrap();
        let _ = (&sd, &h);
        let h3 = HessianModel::dense_from_parts(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let ws = QpWorkspace::build(&sd3, &h3, 1.0, SweepOrder::Shuffled { seed: 42 });
        let mut order = ws.order.clone();
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2]);
    }
}
