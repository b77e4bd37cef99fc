//! Exact level sets of the Hilbert transform of a few point masses.

use std::f64::consts::PI;

use riesz_lab::levelset::{hilbert_levelset_exact, HilbertMethod};
use riesz_lab::PointMassMeasure;

fn main() -> riesz_lab::Result<()> {
    let nu = PointMassMeasure::from_pairs(1, [(1.0, vec![-1.0]), (0.25, vec![0.5]), (2.0, vec![3.0])])?;
    for lambda in [0.1, 1.0, 10.0] {
        let v = hilbert_levelset_exact(&nu, lambda, HilbertMethod::Vieta)?;
        let b = hilbert_levelset_exact(&nu, lambda, HilbertMethod::Bisection)?;
        let loomis = 2.0 * nu.total_variation() / (PI * lambda);
        println!(
            "lambda = {lambda:>5}: vieta {:.12} bisection {:.12} 2|nu|/(pi lambda) {:.12}",
            v.estimate.value, b.estimate.value, loomis
        );
    }
    Ok(())
}
