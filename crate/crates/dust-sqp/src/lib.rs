//! Penalty-SQP solver for nonlinear programs with equality and inequality
//! constraints.
//!
//! The solver minimizes an exact penalty function `phi(x, rho) = rho f(x) + v(x)`,
//! where `v` is the l1 infeasibility measure, and computes search directions from
//! inexact solves of a single piecewise-quadratic subproblem per iteration. The
//! penalty parameter is adjusted *inside* the subproblem solver (DUST): whenever
//! the optimality and complementarity ratios pass their thresholds but the
//! feasibility ratio does not, `rho` is cut by a fixed factor. A posterior check
//! (PSST) guards the model reduction used by the line search. Infeasible problems
//! are detected automatically and terminate at a stationary point of `v`.
//!
//! Subproblems are solved by box-constrained dual coordinate ascent with O(n + r)
//! incremental cache updates per coordinate, which pairs with compact limited-memory
//! Hessian approximations for large problems; small problems use modified exact
//! Hessians.
//!
//! See the `examples/` directory for runnable entry points: single solves, suite
//! runs against the bundled Hock-Schittkowski registry, infeasibility detection,
//! the dual QP solver in isolation, and the compact Hessian algebra.

pub mod driver;
pub mod dust;
pub mod harness;
pub mod hessian;
pub mod nlp;
pub mod penalty;
pub mod qp;

pub use driver::{sqp_solve, SolveResult, SolveStatus, SolverConfig};
pub use nlp::{get_problem, make_infeasible, NlpProblem};
