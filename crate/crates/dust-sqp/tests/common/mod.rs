#![allow(dead_code)] // each test binary compiles its own copy

//! Shared acceptance-test support: reference-table values, cached regression
//! runs, and a brute-force box-active-set oracle for the dual QP.

use nalgebra::{DMatrix, DVector};
use once_cell::sync::Lazy;

use dust_sqp::driver::{sqp_solve, SolveResult, SolverConfig};
use dust_sqp::hessian::HessianModel;
use dust_sqp::nlp::get_problem;
use dust_sqp::penalty::SubproblemData;

/// Reference results for the feasible regression subset:
/// `(name, iters, f, final_rho)`.
pub const TABLE_FEASIBLE: &[(&str, usize, f64, f64)] = &[
    ("hs11", 8, -8.498465, 0.218726),
    ("hs21", 2, -99.96, 1.0),
    ("hs28", 2, 1.117108e-13, 1.0),
    ("hs35", 1, 1.111111e-1, 1.0),
    ("hs43", 15, -43.99990, 0.324783),
    ("hs48", 8, 2.516051e-19, 1.0),
    ("hs51", 2, 6.496671e-17, 1.0),
    ("hs52", 22, 5.326608, 0.101755),
    ("hs61", 13, -143.6461, 0.338698),
    ("hs76", 8, -4.681819, 0.387420),
    ("hs100", 11, 680.6301, 0.540664),
];

/// Reference final violations for the infeasible set: `(name, v)`.
pub const TABLE_INFEASIBLE: &[(&str, f64)] = &[
    ("hs11_inf", 1.000000),
    ("hs14_inf", 1.000002),
    ("hs21_inf", 1.000000),
    ("hs28_inf", 1.000000),
    ("hs32_inf", 1.000000),
    ("hs35_inf", 1.000000),
    ("hs41_inf", 1.000000),
    ("hs43_inf", 1.000000),
    ("hs48_inf", 1.000002),
    ("hs51_inf", 1.000006),
    ("hs52_inf", 1.000006),
    ("hs61_inf", 2.750853),
    ("hs76_inf", 1.000000),
    ("hs100_inf", 1.000000),
    ("hs113_inf", 1.000000),
];

pub fn diagnostics_config() -> SolverConfig {
    SolverConfig { shadow_sweeps: 5000, ..Default::default() }
}

fn run_set(names: &[&str]) -> Vec<(String, SolveResult)> {
    let config = diagnostics_config();
    names
        .iter()
        .map(|name| {
            let p = get_problem(name).unwrap();
            let res = sqp_solve(&p, &config).unwrap();
            (name.to_string(), res)
        })
        .collect()
}

/// The feasible regression runs, solved once and shared across criteria.
pub static FEASIBLE_RUNS: Lazy<Vec<(String, SolveResult)>> = Lazy::new(|| {
    let names: Vec<&str> = TABLE_FEASIBLE.iter().map(|t| t.0).collect();
    run_set(&names)
});

/// The infeasible regression runs.
pub static INFEASIBLE_RUNS: Lazy<Vec<(String, SolveResult)>> = Lazy::new(|| {
    let names: Vec<&str> = TABLE_INFEASIBLE.iter().map(|t| t.0).collect();
    run_set(&names)
});

pub fn all_regression_runs() -> impl Iterator<Item = &'static (String, SolveResult)> {
    FEASIBLE_RUNS.iter().chain(INFEASIBLE_RUNS.iter())
}

/// A random dual-QP instance small enough for exhaustive active-set search.
pub struct OracleInstance {
    pub sd: SubproblemData,
    pub h: HessianModel,
    pub rho: f64,
}

pub fn random_instance(rng: &mut impl rand::Rng) -> Option<OracleInstance> {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let m_eq = rng.random_range(0..=m);
    let g = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let c: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let jac: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let sd = SubproblemData::from_parts(g, &c, jac, m_eq).ok()?;
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    let h_f = &a * a.transpose() + DMatrix::from_diagonal_element(n, n, 0.4);
    let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    let h_0 = &b * b.transpose() + DMatrix::from_diagonal_element(n, n, 0.4);
    let rho = 0.05 + rng.random::<f64>();
    let h = HessianModel::dense_from_parts(h_f, h_0, rho).ok()?;
    Some(OracleInstance { sd, h, rho })
}

/// Maximizes `D(zeta, rho) = -1/2 zeta^T M zeta + q^T zeta + c0` over the
/// multiplier box by enumerating every lower/upper/free pattern, solving the
/// free block of the stationarity system, and keeping the best box-feasible
/// candidate. Returns the optimal value and a maximizer.
pub fn brute_force_dual_opt(inst: &OracleInstance) -> (f64, DVector<f64>) {
    let sd = &inst.sd;
    let h = &inst.h;
    let rho = inst.rho;
    let m = sd.rows.len();
    let (lower, upper) = dust_sqp::qp::dual_box(sd);

    // M = A H^{-1} A^T, q = b - A H^{-1} (rho g), c0 = -1/2 rho^2 g^T H^{-1} g
    let mut big_m = DMatrix::zeros(m, m);
    let hinv_a: Vec<DVector<f64>> = sd.rows.iter().map(|r| h.inverse_apply(&r.a)).collect();
    for i in 0..m {
        for j in 0..m {
            big_m[(i, j)] = sd.rows[i].a.dot(&hinv_a[j]);
        }
    }
    let rho_g = rho * &sd.g;
    let hinv_g = h.inverse_apply(&rho_g);
    let q = DVector::from_fn(m, |i, _| sd.rows[i].b - sd.rows[i].a.dot(&hinv_g));
    let c0 = -0.5 * rho_g.dot(&hinv_g);
    let d_of = |zeta: &DVector<f64>| -> f64 {
        -0.5 * zeta.dot(&(&big_m * zeta)) + q.dot(zeta) + c0
    };

    let mut best_val = f64::NEG_INFINITY;
    let mut best = DVector::zeros(m);
    // patterns: 0 = lower, 1 = upper, 2 = free
    for pattern in 0..3usize.pow(m as u32) {
        let mut code = pattern;
        let mut kinds = Vec::with_capacity(m);
        for _ in 0..m {
            kinds.push(code % 3);
            code /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| kinds[i] == 2).collect();
        let mut zeta = DVector::from_fn(m, |i, _| match kinds[i] {
            0 => lower[i],
            1 => upper[i],
            _ => 0.0,
        });
        if !free.is_empty() {
            let nf = free.len();
            let mff = DMatrix::from_fn(nf, nf, |r, s| big_m[(free[r], free[s])]);
            let rhs = DVector::from_fn(nf, |r, _| {
                let i = free[r];
                let mut val = q[i];
                for j in 0..m {
                    if kinds[j] != 2 {
                        val -= big_m[(i, j)] * zeta[j];
                    }
                }
                val
            });
            // stationarity M_FF zeta_F = rhs; least squares handles the
            // rank-deficient case, inconsistent systems are skipped
            let svd = mff.clone().svd(true, true);
            let Ok(mut zf) = svd.solve(&rhs, 1e-12) else { continue };
            if (&mff * &zf - &rhs).amax() > 1e-8 {
                continue;
            }
            // project between the solution set and the box; D is constant on
            // the solution set, so any box point of it certifies the value
            let pinv = match mff.clone().pseudo_inverse(1e-12) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let mut feasible = true;
            for _ in 0..200 {
                let mut clipped = zf.clone();
                for (r, &i) in free.iter().enumerate() {
                    clipped[r] = clipped[r].clamp(lower[i], upper[i]);
                }
                let back = &clipped - &pinv * (&mff * &clipped - &rhs);
                let drift = (&back - &clipped).amax();
                zf = back;
                if drift <= 1e-12 {
                    feasible = true;
                    break;
                }
                feasible = false;
            }
            let mut ok = feasible;
            for (r, &i) in free.iter().enumerate() {
                if zf[r] < lower[i] - 1e-9 || zf[r] > upper[i] + 1e-9 {
                    ok = false;
                }
            }
            if !ok || (&mff * &zf - &rhs).amax() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                zeta[i] = zf[r].clamp(lower[i], upper[i]);
            }
        }
        let val = d_of(&zeta);
        if val > best_val {
            best_val = val;
            best = zeta;
        }
    }
    (best_val, best)
}
