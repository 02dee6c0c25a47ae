//! Solves one named problem and prints the per-iteration trace and summary.
//!
//! ```text
//! cargo run --example solve -- hs61 [key=value]...
//! ```

use dust_sqp::harness::apply_override;
use dust_sqp::nlp::get_problem;
use dust_sqp::{sqp_solve, SolverConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().expect("usage: solve <problem> [key=value]...");
    let mut config = SolverConfig::default();
    for kv in &args[1..] {
        let (k, v) = kv.split_once('=').expect("overrides are key=value");
        apply_override(&mut config, k, v).unwrap();
    }
    let p = get_problem(name).unwrap();
    println!("{} (n={}, m={}, m_eq={})", p.name, p.n, p.m, p.m_eq);
    let res = sqp_solve(&p, &config).unwrap();
    println!("  k     f            v           v_inf       eps_opt     eps_fea     rho        omega      alpha     |d|        sweeps red null ls");
    for t in &res.trace {
        println!(
            "{:3} {:12.5e} {:11.4e} {:11.4e} {:11.4e} {:11.4e} {:10.4e} {:10.4e} {:9.3e} {:10.4e} {:6} {:3} {:5} {:2}",
            t.k, t.f, t.v, t.v_inf, t.eps_opt, t.eps_fea, t.rho, t.omega, t.alpha, t.d_norm,
            t.inner_sweeps, t.rho_reductions, t.null_step, t.ls_trials
        );
    }
    println!(
        "status {} after {} iterations: f = {:.9e}, v = {:.3e}, eps_opt = {:.3e}, eps_fea = {:.3e}, rho = {:.6e}, nf = {}",
        res.status,
        res.outer_iters,
        res.f_final,
        res.v_final,
        res.eps_opt,
        res.eps_fea,
        res.rho_final,
        res.counters.n_f
    );
    if let Some(err) = res.diagnostics.derivative_check_error {
        if err > 1e-5 {
            eprintln!("warning: derivative check error {err:.3e} at x0");
        }
    }
}
