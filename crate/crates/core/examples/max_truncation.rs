//! Transform and maximal truncation along a line through two masses.

use riesz_lab::{KernelSpec, PointMassMeasure};

fn main() -> riesz_lab::Result<()> {
    let spec = KernelSpec::riesz(2, 1)?;
    let nu = PointMassMeasure::from_pairs(2, [(1.0, vec![-0.5, 0.0]), (1.0, vec![0.5, 0.0])])?;
    for k in 0..=8 {
        let x = [-2.05 + 0.5 * k as f64, 0.2];
        println!(
            "x = ({:>5.2}, {:.1}): T = {:>9.5}  T# = {:>8.5}",
            x[0],
            x[1],
            nu.transform(&spec, &x)?,
            nu.max_truncation(&spec, &x)?
        );
    }
    Ok(())
}
