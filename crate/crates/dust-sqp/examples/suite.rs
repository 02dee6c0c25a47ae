//! Runs the bundled test registry (feasible, infeasible, or both) and prints
//! the per-problem table plus the success summary.
//!
//! ```text
//! cargo run --example suite -- [feasible|infeasible|all] [jobs]
//! ```

use dust_sqp::harness::{report_to_csv, run_suite, SuiteSet};
use dust_sqp::SolverConfig;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let set: SuiteSet = args.first().map(|s| s.as_str()).unwrap_or("all").parse().unwrap();
    let jobs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let config = SolverConfig::default();
    let t0 = std::time::Instant::now();
    let report = run_suite(set, &config, jobs);
    print!("{}", report_to_csv(&report));
    eprintln!(
        "{} problems, {} succeed, {} fail ({:.1}%) in {:.2?}",
        report.rows.len(),
        report.succeed,
        report.fail,
        100.0 * report.success_rate(),
        t0.elapsed()
    );
}
