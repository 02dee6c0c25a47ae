//! Automatic infeasibility detection: transforms a solvable problem into one
//! with contradictory bounds, solves it, and prints the stationarity
//! certificate for the infeasibility measure.

use dust_sqp::nlp::{get_problem, make_infeasible, EvalCounters};
use dust_sqp::penalty::kkt_errors;
use dust_sqp::{sqp_solve, SolverConfig};
use nalgebra::DVector;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "hs11".into());
    let base = get_problem(&name).unwrap();
    let p = make_infeasible(&base);
    println!("{}: {} constraints after injecting x1 <= 0 and x1 >= 1", p.name, p.m);

    let res = sqp_solve(&p, &SolverConfig::default()).unwrap();
    println!(
        "status {} after {} iterations: v(x*) = {:.6}, max violation {:.6}",
        res.status, res.outer_iters, res.v_final, res.v_inf_final
    );
    println!("x* = {:?}", res.x_final.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>());
    println!("feasibility KKT error = {:.3e} (certificate quality)", res.eps_fea);

    // the certificate by hand: weights 1 on the two contradictory rows and 0
    // elsewhere already annihilate the weighted gradient sum
    let mut eta = DVector::zeros(p.m);
    eta[p.m - 2] = 1.0;
    eta[p.m - 1] = 1.0;
    let mut k = EvalCounters::default();
    let rep = kkt_errors(&p, &res.x_final, &eta, &mut k);
    println!("hand certificate on the injected rows: eps_fea = {:.3e}", rep.eps_fea);
}
