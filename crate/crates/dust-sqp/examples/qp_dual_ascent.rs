//! The subproblem machinery in isolation: builds one piecewise-quadratic
//! subproblem, runs dual coordinate-ascent sweeps, and prints the duality gap
//! closing together with the three ratio tests the penalty update reads.

use dust_sqp::dust::{complementarity_chi, compute_ratios, dust_decide, DualSnapshot};
use dust_sqp::hessian::HessianModel;
use dust_sqp::penalty::SubproblemData;
use dust_sqp::qp::{
    dual_objective, primal_objective, primal_recover, sufficient_dual_pair, sweep, DualIterate,
    QpWorkspace, SweepOrder,
};
use nalgebra::{DMatrix, DVector};

fn main() {
    // two variables, one violated equality and two inequalities
    let g = DVector::from_vec(vec![1.0, -0.5]);
    let c = [0.8, -0.2, 0.4];
    let jac = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![0.5, 2.0]];
    let sd = SubproblemData::from_parts(g, &c, jac, 1).unwrap();
    let h = HessianModel::dense_from_parts(
        DMatrix::from_partial_diagonal(2, 2, &[1.0, 2.0]),
        DMatrix::identity(2, 2),
        1.0,
    )
    .unwrap();
    let (rho, omega) = (1.0, 1e-2);

    let ws = QpWorkspace::build(&sd, &h, rho, SweepOrder::Ascending);
    let mut state = DualIterate::warm_start(&sd, &ws, &h, None);
    println!("J(0) = v(x) = {:.6}, omega = {omega}", sd.j0);
    println!("sweep      D(zeta,rho)      J(d,rho)       gap        r_v     r_phi   r_c     chi");
    for s in 1..=12 {
        sweep(&mut state, rho, &ws, &sd, &h, true);
        let d_zeta = dual_objective(&state.zeta, rho, &sd, &h);
        let d = primal_recover(&state.zeta, rho, &sd, &h);
        let (d_used, j_rho) = sufficient_dual_pair(d, rho, &sd, &h);
        let duals = DualSnapshot { d_zeta_rho: d_zeta, d_w_0: state.d_best_w };
        let rep = compute_ratios(&d_used, &state.zeta, &duals, omega, &sd, j_rho).unwrap();
        let chi = complementarity_chi(&d_used, &state.zeta, &sd);
        println!(
            "{s:3}   {d_zeta:14.9} {j_rho:14.9} {:10.3e} {:7.4} {:7.4} {:7.4} {:8.2e}",
            j_rho - d_zeta,
            rep.r_v,
            rep.r_phi,
            rep.r_c,
            chi
        );
        let (decision, _) = dust_decide(rep.r_v, rep.r_phi, rep.r_c, 0.1, 0.7, 0.9, rho);
        if s == 12 {
            println!("decision after final sweep: {decision:?}");
            let j0 = primal_objective(&DVector::zeros(2), rho, &sd, &h);
            println!("step d = ({:.6}, {:.6}), J(0) = {j0:.6}", d_used[0], d_used[1]);
        }
    }
}
