//! Seeded synthetic convex problems for exercising the limited-memory path at
//! sizes the hand-coded registry does not reach.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{build_problem, Constraint, ConstraintKind, NlpProblem};

/// Convex QP-like NLP: strongly convex quadratic objective, linear equality
/// and inequality rows, plus a few convex quadratic inequalities so the
/// constraint Hessian term is nontrivial. Feasible by construction (a known
/// interior point satisfies every row with slack); the starting point is a
/// perturbation of that point.
pub fn medium_convex(n: usize, m_eq: usize, m_ineq: usize, n_quad: usize, seed: u64) -> NlpProblem {
    assert!(n_quad <= m_ineq);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Objective 1/2 x^T M x + q^T x with M = D + sum of a few rank-1 terms.
    let diag: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let rank1: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let q: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();

    let apply_m = {
        let diag = diag.clone();
        let rank1 = rank1.clone();
        move |x: &[f64]| -> Vec<f64> {
            let mut out: Vec<f64> = x.iter().zip(&diag).map(|(xi, di)| di * xi).collect();
            for u in &rank1 {
                let dot: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
                for (o, ui) in out.iter_mut().zip(u) {
                    *o += dot * ui;
                }
            }
            out
        }
    };

    let xhat: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();

    let mut cons: Vec<Constraint> = Vec::with_capacity(m_eq + m_ineq);
    for _ in 0..m_eq {
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = -a.iter().zip(&xhat).map(|(ai, xi)| ai * xi).sum::<f64>();
        cons.push(Constraint::linear(ConstraintKind::Equality, n, a, b));
    }
    for j in 0..m_ineq {
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let at_xhat: f64 = a.iter().zip(&xhat).map(|(ai, xi)| ai * xi).sum();
        // Mix of slack sizes so a few rows go active at the solution.
        let slack = 0.05 + 1.5 * rng.random::<f64>();
        if j < n_quad {
            // 1/2 w (u^T x)^2 + a^T x + b <= 0 with w > 0 (convex).
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let w = 0.1 + rng.random::<f64>();
            let u_xhat: f64 = u.iter().zip(&xhat).map(|(ui, xi)| ui * xi).sum();
            let b = -(0.5 * w * u_xhat * u_xhat + at_xhat + slack);
            let (uv, ug, uh) = (u.clone(), u.clone(), u);
            let (av, ag) = (a.clone(), a);
            cons.push(Constraint::new(
                ConstraintKind::Inequality,
                Arc::new(move |x: &[f64]| {
                    let t: f64 = uv.iter().zip(x).map(|(ui, xi)| ui * xi).sum();
                    let lin: f64 = av.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                    0.5 * w * t * t + lin + b
                }),
                Arc::new(move |x: &[f64]| {
                    let t: f64 = ug.iter().zip(x).map(|(ui, xi)| ui * xi).sum();
                    ug.iter().zip(&ag).map(|(ui, ai)| w * t * ui + ai).collect()
                }),
                Arc::new(move |_: &[f64]| {
                    let u = nalgebra::DVector::from_column_slice(&uh);
                    w * &u * u.transpose()
                }),
            ));
        } else {
            cons.push(Constraint::linear(ConstraintKind::Inequality, n, a, -(at_xhat + slack)));
        }
    }

    let x0: Vec<f64> = xhat.iter().map(|xi| xi + 0.3 * (rng.random::<f64>() - 0.5)).collect();

    let (diag_h, rank1_h) = (diag, rank1);
    let apply_m_g = apply_m.clone();
    let q_g = q.clone();
    build_problem(
        &format!("synthetic_{n}x{}", m_eq + m_ineq),
        n,
        x0,
        Arc::new(move |x| {
            let mx = apply_m(x);
            0.5 * x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>()
                + q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }),
        Arc::new(move |x| {
            let mut g = apply_m_g(x);
            for (gi, qi) in g.iter_mut().zip(&q_g) {
                *gi += qi;
            }
            g
        }),
        Arc::new(move |_| {
            let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diag_h));
            for u in &rank1_h {
                let uv = nalgebra::DVector::from_column_slice(u);
                h += &uv * uv.transpose();
            }
            h
        }),
        cons,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::{check_derivatives, EvalCounters};

    #[test]
    fn derivatives_consistent() {
        let p = medium_convex(20, 4, 10, 3, 7);
        let err = check_derivatives(&p, &p.x0.clone(), 1e-6);
        assert!(err < 1e-5, "derivative error {err:.3e}");
    }

    #[test]
    fn interior_point_exists() {
        let p = medium_convex(30, 5, 12, 4, 11);
        let mut k = EvalCounters::default();
        // x0 is near the certified interior point; most rows hold with slack.
        let c = p.c(&p.x0.clone(), &mut k);
        let violated = c
            .iter()
            .enumerate()
            .filter(|(i, ci)| if *i < p.m_eq { ci.abs() > 0.5 } else { **ci > 0.5 })
            .count();
        assert!(violated < p.m / 2);
    }
}
