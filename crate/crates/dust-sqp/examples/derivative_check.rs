//! Verifies the analytic first derivatives of every registered problem
//! against central finite differences at the standard starting point.

use dust_sqp::nlp::{check_derivatives, get_problem, problem_names};

fn main() {
    let mut worst: (f64, String) = (0.0, String::new());
    for name in problem_names() {
        for variant in [name.to_string(), format!("{name}_inf")] {
            let p = get_problem(&variant).unwrap();
            let err = check_derivatives(&p, &p.x0.clone(), 1e-6);
            println!("{variant:12} n={:2} m={:2} m_eq={:1}  max rel error {err:.3e}", p.n, p.m, p.m_eq);
            if err > worst.0 {
                worst = (err, variant);
            }
        }
    }
    println!("worst: {} at {:.3e}", worst.1, worst.0);
}
