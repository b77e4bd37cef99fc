//! Monte Carlo level set of a Riesz transform of three masses in the plane,
//! and the standard error as the sample count grows.

use riesz_lab::levelset::{weaktype_functional, Evaluation};
use riesz_lab::{KernelSpec, McOptions, PointMassMeasure};

fn main() -> riesz_lab::Result<()> {
    let spec = KernelSpec::riesz(2, 1)?;
    let nu = PointMassMeasure::from_pairs(2, [(1.0, vec![0.0, 0.0]), (0.5, vec![0.3, 0.1]), (0.8, vec![-0.2, 0.6])])?;
    for samples in [10_000u64, 40_000, 160_000, 640_000] {
        let w = weaktype_functional(&spec, &nu, 0.9, Evaluation::MonteCarlo(McOptions::new(samples, 5)))?;
        println!(
            "{samples:>7} samples: |level set| = {:.5} ± {:.5}, weak-type ratio {:.5}",
            w.level_set.value, w.level_set.standard_error, w.value
        );
    }
    Ok(())
}
