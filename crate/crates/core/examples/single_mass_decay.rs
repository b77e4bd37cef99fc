//! `|{|a R_j δ_0| > λ}| = (2/(πn))·a/λ`: the level set of one mass shrinks like 1/n.

use riesz_lab::levelset::{mc_levelset, single_mass_levelset_exact};
use riesz_lab::{KernelSpec, McOptions, PointMassMeasure};

fn main() -> riesz_lab::Result<()> {
    for n in [1usize, 2, 4, 8, 16] {
        let spec = KernelSpec::riesz(n, 1)?;
        let exact = single_mass_levelset_exact(&spec, 1.0, 1.0)?;
        let mc = mc_levelset(&spec, &PointMassMeasure::dirac(vec![0.0; n]), 1.0, McOptions::new(100_000, 1))?;
        println!(
            "n = {n:>2}: quadrature {:.6}  monte carlo {:.6} ± {:.6}  n·V_n = {:.6}",
            exact.value,
            mc.value,
            mc.standard_error,
            n as f64 * exact.value
        );
    }
    Ok(())
}
