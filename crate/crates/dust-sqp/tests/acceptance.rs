//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Criteria 1-3 pin the solver
//! against the reference regression tables; 4-8 assert the duality, penalty
//! update, and monotonicity contracts on those same runs; 9-10 gate the
//! numerical kernels; 11 checks parameter sensitivity; 12 gates the
//! limited-memory path on a medium synthetic problem.

mod common;

use std::time::Instant;

use common::*;
use dust_sqp::driver::{sqp_solve, HessianBackend, SolveStatus, SolverConfig};
use dust_sqp::harness::run_single;
use dust_sqp::hessian::{build_exact_modified, CompactFactors, HessianModel};
use dust_sqp::nlp::{check_derivatives, get_problem, problem_names, synthetic::medium_convex};
use dust_sqp::qp::{
    dual_objective, primal_objective, primal_recover, sweep, DualIterate, QpWorkspace, SweepOrder,
};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn pass(line: &str) {
    println!("criterion {line}: PASS");
}

/// 1. Feasible regression: status, objective, violation, KKT error, iteration
/// budget, and a loose final-penalty check against the reference table.
#[test]
fn criterion_01_feasible_regression() {
    let config = diagnostics_config();
    let t0 = Instant::now();
    for &(name, iters_ref, f_ref, rho_ref) in TABLE_FEASIBLE {
        let p = get_problem(name).unwrap();
        let res = sqp_solve(&p, &config).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal, "{name}: status {:?}", res.status);
        let ftol = f64::max(1e-4, 1e-4 * f_ref.abs());
        assert!(
            (res.f_final - f_ref).abs() <= ftol,
            "{name}: f = {:.9e} vs reference {f_ref:.9e}",
            res.f_final
        );
        assert!(res.v_inf_final <= 1e-5, "{name}: v_inf = {:.3e}", res.v_inf_final);
        assert!(res.eps_opt <= 1e-4, "{name}: eps_opt = {:.3e}", res.eps_opt);
        assert!(
            res.outer_iters <= 5 * iters_ref,
            "{name}: {} iterations vs budget {}",
            res.outer_iters,
            5 * iters_ref
        );
        let (lo, hi) = (rho_ref / 3.0, 3.0 * rho_ref);
        assert!(
            res.rho_final >= lo && res.rho_final <= hi,
            "{name}: final rho {:.6} outside [{lo:.6}, {hi:.6}]",
            res.rho_final
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "feasible regression took {elapsed:.2?}");
    pass(&format!("01 feasible regression vs reference table ({elapsed:.2?})"));
}

/// 2. Infeasible regression: every `_inf` problem terminates at an infeasible
/// stationary point whose violation matches the reference value.
#[test]
fn criterion_02_infeasible_regression() {
    let config = diagnostics_config();
    let t0 = Instant::now();
    for &(name, v_ref) in TABLE_INFEASIBLE {
        let p = get_problem(name).unwrap();
        let res = sqp_solve(&p, &config).unwrap();
        assert_eq!(
            res.status,
            SolveStatus::InfeasibleStationary,
            "{name}: status {:?}",
            res.status
        );
        assert!(
            (res.v_final - v_ref).abs() <= 1e-3,
            "{name}: v = {:.6} vs reference {v_ref:.6}",
            res.v_final
        );
        assert!(res.eps_fea <= 1e-4, "{name}: eps_fea = {:.3e}", res.eps_fea);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "infeasible regression took {elapsed:.2?}");
    pass(&format!("02 infeasible regression vs reference table ({elapsed:.2?})"));
}

/// 3. Penalty trajectories for hs11, hs43, hs61: nonincreasing, ending within
/// a factor of 3 of the reference value (capped at the initial weight 1).
#[test]
fn criterion_03_rho_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    for &(name, rho_ref) in &[("hs11", 0.218726), ("hs43", 0.324783), ("hs61", 0.338698)] {
        let res = run_single(name, &SolverConfig::default(), Some(dir.path())).unwrap();
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.rho"))).unwrap();
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        let mut count = 0;
        for line in text.lines() {
            let mut it = line.split_whitespace();
            let k: usize = it.next().unwrap().parse().unwrap();
            let rho: f64 = it.next().unwrap().parse().unwrap();
            assert_eq!(k, count, "{name}: trajectory indices must be consecutive");
            assert!(rho <= prev + 1e-15, "{name}: rho increased at k={k}");
            prev = rho;
            last = rho;
            count += 1;
        }
        assert_eq!(count, res.rho_trajectory.len());
        let (lo, hi) = (rho_ref / 3.0, f64::min(1.0, 3.0 * rho_ref));
        assert!(
            last >= lo && last <= hi,
            "{name}: final rho {last:.6} outside [{lo:.6}, {hi:.6}]"
        );
    }
    pass("03 rho trajectories nonincreasing and in range");
}

/// 4. Weak duality on every inner sweep of every regression run:
/// `D(lambda,0) <= J(d,0)` and `D(zeta,rho) <= J(d,rho)` to a 1e-9
/// scale-normalized slack.
#[test]
fn criterion_04_weak_duality() {
    let mut worst: f64 = f64::NEG_INFINITY;
    for (name, res) in all_regression_runs() {
        let gap = res.diagnostics.max_weak_duality_gap;
        assert!(gap <= 1e-9, "{name}: weak-duality gap {gap:.3e}");
        worst = worst.max(gap);
    }
    pass(&format!("04 weak duality across all sweeps (worst gap {worst:.2e})"));
}

/// 5. Coordinate descent against the brute-force box-active-set oracle on 200
/// random small instances: dual values to 1e-7, recovered primal to 1e-6.
#[test]
fn criterion_05_qp_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut done = 0;
    while done < 200 {
        let Some(inst) = random_instance(&mut rng) else { continue };
        let (d_star, _) = brute_force_dual_opt(&inst);
        // coordinate ascent run to convergence at fixed rho
        let ws = QpWorkspace::build(&inst.sd, &inst.h, inst.rho, SweepOrder::Ascending);
        let mut state = DualIterate::warm_start(&inst.sd, &ws, &inst.h, None);
        let mut prev = f64::NEG_INFINITY;
        let mut stall = 0;
        for _ in 0..400_000u64 {
            sweep(&mut state, inst.rho, &ws, &inst.sd, &inst.h, true);
            let val = dual_objective(&state.zeta, inst.rho, &inst.sd, &inst.h);
            if (val - prev).abs() <= 1e-16 * (1.0 + val.abs()) {
                stall += 1;
                if stall >= 32 {
                    break;
                }
            } else {
                stall = 0;
            }
            prev = val;
        }
        let d_cd = dual_objective(&state.zeta, inst.rho, &inst.sd, &inst.h);
        assert!(
            (d_cd - d_star).abs() <= 1e-7,
            "instance {done}: dual {d_cd:.12e} vs oracle {d_star:.12e}"
        );
        let d = primal_recover(&state.zeta, inst.rho, &inst.sd, &inst.h);
        let j = primal_objective(&d, inst.rho, &inst.sd, &inst.h);
        assert!(
            (j - d_star).abs() <= 1e-6,
            "instance {done}: primal {j:.12e} vs oracle {d_star:.12e}"
        );
        done += 1;
    }
    pass("05 dual coordinate descent matches brute-force oracle on 200 instances");
}

/// 6. The penalty update fires finitely often per subproblem: every
/// post-termination shadow continuation reaches 50 reduction-free sweeps.
#[test]
fn criterion_06_dust_finiteness() {
    let mut total = 0;
    for (name, res) in all_regression_runs() {
        assert!(
            res.diagnostics.shadow_tails_clean,
            "{name}: a subproblem kept reducing rho in its shadow continuation"
        );
        total += res.diagnostics.shadow_reductions;
    }
    pass(&format!("06 penalty reductions finite with clean 50-sweep tails ({total} shadow firings)"));
}

/// 7. Posterior update contract: the restored inequality holds at every
/// accepted step, and the fallback formula reproduces the worked example.
#[test]
fn criterion_07_psst_contract() {
    let mut worst = f64::INFINITY;
    for (name, res) in all_regression_runs() {
        let margin = res.diagnostics.min_psst_margin;
        assert!(margin >= -1e-12, "{name}: posterior margin {margin:.3e}");
        worst = worst.min(margin);
    }
    // worked fallback example: dl(d,0) = 1, omega = 0.01, beta_l = 0.378,
    // <g,d> = 2, <d,Hd> = 1, entry rho small enough to force the fallback:
    // rho_k = (1 - 0.378) * 1.01 / (2 + 0.5) = 0.251288
    let sd = dust_sqp::penalty::SubproblemData::from_parts(
        DVector::from_vec(vec![2.0]),
        &[-1.0],
        vec![vec![1.0]],
        1,
    )
    .unwrap();
    let h = HessianModel::dense_from_parts(
        DMatrix::from_element(1, 1, 1.0 / 0.405),
        DMatrix::zeros(1, 1),
        0.405,
    )
    .unwrap();
    let d = DVector::from_vec(vec![1.0]);
    let (rho_k, fallback) =
        dust_sqp::driver::psst_update(0.405, &d, &sd, &h, 0.01, 0.378).unwrap();
    assert!(fallback);
    assert!(
        (rho_k - 0.251288).abs() <= 1e-7,
        "fallback rho {rho_k:.9} vs worked value 0.251288"
    );
    pass(&format!("07 posterior update contract (worst margin {worst:.2e}, fallback rho {rho_k:.7})"));
}

/// 8. Shifted-penalty monotonicity along every regression run: with the trace
/// minimum as the objective shift, the sequence decreases by at least the
/// accepted Armijo amount.
#[test]
fn criterion_08_shifted_penalty_monotonicity() {
    for (name, res) in all_regression_runs() {
        if res.trace.is_empty() {
            continue;
        }
        let f_low = res
            .trace
            .iter()
            .map(|t| t.f)
            .chain(std::iter::once(res.f_final))
            .fold(f64::INFINITY, f64::min);
        let shifted = |f: f64, v: f64, rho: f64| rho * (f - f_low) + v;
        for w in res.trace.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let phi_a = shifted(a.f, a.v, a.rho);
            let phi_b = shifted(b.f, b.v, b.rho);
            assert!(
                phi_b <= phi_a - 1e-4 * a.alpha * a.delta_l_rho + 1e-10,
                "{name}: k={} shifted penalty rose: {phi_b:.12e} vs {phi_a:.12e}",
                a.k
            );
        }
        let last = res.trace.last().unwrap();
        let phi_last = shifted(last.f, last.v, last.rho);
        let phi_final = shifted(res.f_final, res.v_final, last.rho);
        assert!(
            phi_final <= phi_last - 1e-4 * last.alpha * last.delta_l_rho + 1e-10,
            "{name}: final step broke monotonicity"
        );
    }
    pass("08 shifted-penalty monotonicity on all regression runs");
}

/// 9. Hessian kernels: inverse identity on 100 low-rank instances, rescaling
/// against direct reassembly, and the eigenvalue floor / condition blend on
/// 100 random symmetric matrices.
#[test]
fn criterion_09_hessian_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    // Sherman-Morrison inverse residuals
    for _ in 0..100 {
        let n = rng.random_range(2..9);
        let r = rng.random_range(1..=n.min(4));
        let u = DMatrix::from_fn(n, r, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let a = DMatrix::from_fn(r, r, |_, _| rng.random::<f64>() - 0.5);
        let m = &a * a.transpose() + DMatrix::from_diagonal_element(r, r, 0.3);
        let f = CompactFactors { scalar: 0.5 + rng.random::<f64>(), u, m };
        let zero = CompactFactors::identity_scaled(n, 1.0);
        let h = HessianModel::low_rank_from_parts(&f, &zero, 1.0).unwrap();
        let z = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let x = h.inverse_apply(&z);
        let resid = (h.apply_rho(&x) - &z).norm() / z.norm();
        assert!(resid <= 1e-10, "inverse residual {resid:.3e}");
    }
    // rescaling vs direct reassembly
    for _ in 0..100 {
        let n = rng.random_range(2..7);
        let make = |rng: &mut ChaCha8Rng, r: usize| CompactFactors {
            scalar: 0.5 + rng.random::<f64>(),
            u: DMatrix::from_fn(n, r, |_, _| rng.random::<f64>() - 0.5),
            m: {
                let a = DMatrix::from_fn(r, r, |_, _| rng.random::<f64>() - 0.5);
                &a * a.transpose() + DMatrix::from_diagonal_element(r, r, 0.3)
            },
        };
        let rf = rng.random_range(0..=3);
        let rz = rng.random_range(0..=3);
        let f_part = make(&mut rng, rf);
        let zero_part = make(&mut rng, rz);
        let model = HessianModel::low_rank_from_parts(&f_part, &zero_part, 1.0).unwrap();
        let rho_bar = 0.15 + 0.7 * rng.random::<f64>();
        let rescaled = model.rescale_rho(rho_bar).unwrap();
        let target = rho_bar * f_part.to_dense() + zero_part.to_dense();
        let z = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let x = rescaled.inverse_apply(&z);
        let resid = (&target * &x - &z).norm() / z.norm();
        assert!(resid <= 1e-9, "rescale residual {resid:.3e}");
    }
    // eigenvalue floor and condition-number control
    for _ in 0..100 {
        let n = rng.random_range(1..7);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let sym = 0.5 * (&a + a.transpose());
        let (tau, t_cond) = (1e-4, 1e4);
        let out = build_exact_modified(&sym, tau, t_cond);
        let vals = nalgebra::SymmetricEigen::new(out).eigenvalues;
        assert!(vals.min() >= tau - 1e-12, "floor broken: {:.3e}", vals.min());
        assert!(
            vals.max() / vals.min() <= t_cond * (1.0 + 1e-9),
            "condition bound broken: {:.3e}",
            vals.max() / vals.min()
        );
    }
    pass("09 Hessian algebra (inverse, rescaling, modification) on random instances");
}

/// 10. First derivatives of every registered problem (including the `_inf`
/// variants) agree with central differences at the starting point.
#[test]
fn criterion_10_derivative_checks() {
    let mut worst: f64 = 0.0;
    for name in problem_names() {
        for variant in [name.to_string(), format!("{name}_inf")] {
            let p = get_problem(&variant).unwrap();
            let err = check_derivatives(&p, &p.x0.clone(), 1e-6);
            assert!(err <= 1e-5, "{variant}: derivative error {err:.3e}");
            worst = worst.max(err);
        }
    }
    pass(&format!("10 derivative checks on the full registry (worst {worst:.2e})"));
}

/// 11. Sensitivity: the feasible regression subset keeps a >= 90% optimal
/// rate under beta_phi = 0.5 and beta_phi = 0.99.
#[test]
fn criterion_11_beta_phi_sensitivity() {
    for beta_phi in [0.5, 0.99] {
        let config = SolverConfig { beta_phi, ..Default::default() };
        config.validate().unwrap();
        let mut optimal = 0;
        for &(name, _, _, _) in TABLE_FEASIBLE {
            let p = get_problem(name).unwrap();
            let res = sqp_solve(&p, &config).unwrap();
            if res.status == SolveStatus::Optimal {
                optimal += 1;
            }
        }
        let rate = optimal as f64 / TABLE_FEASIBLE.len() as f64;
        assert!(
            rate >= 0.9,
            "beta_phi = {beta_phi}: only {optimal}/{} optimal",
            TABLE_FEASIBLE.len()
        );
    }
    pass("11 beta_phi sensitivity keeps >= 90% success");
}

/// 12. Limited-memory gate: the 500x300 synthetic convex problem solves to
/// tolerance with the compact backend inside 60 seconds.
#[test]
fn criterion_12_medium_lbfgs_gate() {
    let p = medium_convex(500, 100, 200, 20, 2024);
    let config = SolverConfig {
        hessian_backend: HessianBackend::LBFGS { memory: 10 },
        max_inner_sweeps: 2_000,
        derivative_check: false,
        ..Default::default()
    };
    let t0 = Instant::now();
    let res = sqp_solve(&p, &config).unwrap();
    let elapsed = t0.elapsed();
    assert_eq!(res.status, SolveStatus::Optimal, "status {:?}", res.status);
    assert!(res.v_inf_final <= 1e-5 && res.eps_opt <= 1e-4);
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:.2?}");
    pass(&format!("12 medium synthetic with L-BFGS backend in {elapsed:.2?}"));
}
