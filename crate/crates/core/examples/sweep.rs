//! Best weak-type ratio found per dimension and mass count, next to 2/(πn).

use std::f64::consts::PI;

use riesz_lab::search::{dimension_sweep, OptimizerKind, SweepBudget};
use riesz_lab::{KernelSpec, McOptions};

fn main() {
    let budget = SweepBudget {
        mc: McOptions::new(10_000, 11),
        max_evals: 40,
        restarts: 2,
        optimizer: OptimizerKind::Auto,
    };
    let rows = dimension_sweep(|n| KernelSpec::riesz(n, 1), &[1, 2, 3, 5], &[1, 2, 3], budget);
    for row in rows {
        println!(
            "n = {} N = {}: {:.5} ± {:.5}  (2/(πn) = {:.5})",
            row.n,
            row.masses,
            row.best,
            row.standard_error,
            2.0 / (PI * row.n as f64)
        );
    }
}
