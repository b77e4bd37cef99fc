//! Search for a three-mass configuration maximising the weak-type ratio of R_1 on R^2.

use riesz_lab::search::{optimize, OptimizerKind, SearchProblem};
use riesz_lab::{KernelSpec, McOptions};

fn main() -> riesz_lab::Result<()> {
    let mut problem = SearchProblem::new(KernelSpec::riesz(2, 1)?, 3, McOptions::new(20_000, 1));
    problem.max_evals = 100;
    problem.optimizer = OptimizerKind::RandomRestart;
    let r = optimize(&problem)?;
    println!("baseline (one mass) {:.5}", r.baseline);
    println!("best {:.5} ± {:.5} after {} evaluations", r.value, r.standard_error, r.evaluations);
    println!("fresh seed, 10x samples: {:.5} ± {:.5}", r.reevaluated, r.reevaluated_standard_error);
    for t in &r.trace {
        println!("  eval {:>4}: {:.5}", t.evaluation, t.value);
    }
    println!("{}", r.best.to_json());
    Ok(())
}
