//! Compact limited-memory Hessian algebra: builds factors from curvature
//! pairs, checks the secant equation and the inverse identity, and shows a
//! penalty rescaling agreeing with direct reassembly while never forming an
//! n x n matrix.

use dust_sqp::hessian::{lbfgs_update, HessianModel};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spd = |rng: &mut ChaCha8Rng| {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(n, n)
    };
    let target_f = spd(&mut rng);
    let target_0 = spd(&mut rng);

    // curvature pairs sampled from the two target matrices
    let pairs = |target: &DMatrix<f64>, rng: &mut ChaCha8Rng| -> Vec<(DVector<f64>, DVector<f64>)> {
        (0..6)
            .map(|_| {
                let s = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
                let y = target * &s;
                (s, y)
            })
            .collect()
    };
    let hist_f = pairs(&target_f, &mut rng);
    let hist_0 = pairs(&target_0, &mut rng);

    let (f_fac, skipped_f) = lbfgs_update(n, &hist_f, 5);
    let (z_fac, skipped_0) = lbfgs_update(n, &hist_0, 5);
    println!("factors: rank_f = {}, rank_0 = {}, skipped = {}", f_fac.rank(), z_fac.rank(), skipped_f + skipped_0);

    let (s_new, y_new) = hist_f.last().unwrap();
    let hf = f_fac.to_dense();
    println!("secant residual |H_f s - y| / |y| = {:.3e}", (&hf * s_new - y_new).norm() / y_new.norm());

    let rho = 1.0;
    let h = HessianModel::low_rank_from_parts(&f_fac, &z_fac, rho).unwrap();
    let z = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let x = h.inverse_apply(&z);
    println!("inverse identity |H x - z| / |z| = {:.3e}", (h.apply_rho(&x) - &z).norm() / z.norm());
    let (lo, hi) = h.eigen_bounds();
    println!("eigenvalue bounds of H_rho: [{lo:.4}, {hi:.4}]");

    // rescale to a smaller penalty weight and compare with reassembly
    let rho_bar = 0.35;
    let rescaled = h.rescale_rho(rho_bar).unwrap();
    let dense_target = rho_bar * f_fac.to_dense() + z_fac.to_dense();
    let x = rescaled.inverse_apply(&z);
    println!(
        "after rescaling to rho = {rho_bar}: |(rho H_f + H_0) x - z| / |z| = {:.3e}",
        (&dense_target * &x - &z).norm() / z.norm()
    );
}
