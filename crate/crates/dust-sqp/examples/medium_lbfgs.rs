//! Solves a 500-variable, 300-constraint synthetic convex problem with the
//! compact limited-memory Hessian backend, exercising the O(n + r)
//! coordinate updates and the factor rescaling on penalty reductions.

use dust_sqp::driver::HessianBackend;
use dust_sqp::nlp::synthetic::medium_convex;
use dust_sqp::{sqp_solve, SolverConfig};

fn main() {
    let p = medium_convex(500, 100, 200, 20, 2024);
    let config = SolverConfig {
        hessian_backend: HessianBackend::LBFGS { memory: 10 },
        max_inner_sweeps: 2_000,
        derivative_check: false,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let res = sqp_solve(&p, &config).unwrap();
    println!(
        "{}: status {} after {} iterations in {:.2?}\n  f = {:.9e}, v_inf = {:.3e}, eps_opt = {:.3e}, rho = {:.4}, nf = {}",
        p.name,
        res.status,
        res.outer_iters,
        t0.elapsed(),
        res.f_final,
        res.v_inf_final,
        res.eps_opt,
        res.rho_final,
        res.counters.n_f
    );
}
