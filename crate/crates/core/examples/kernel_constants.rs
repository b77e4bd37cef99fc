//! Normalisations, sphere norms and the dimensional constant for a few dimensions.

use riesz_lab::kernels::{dimensional_constant, riesz_normalization, second_order_normalization};
use riesz_lab::levelset::unit_level_volume;
use riesz_lab::KernelSpec;

fn main() -> riesz_lab::Result<()> {
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "n", "c_n", "c'_n", "dc(n)", "V_n");
    for n in [1usize, 2, 3, 5, 10, 50] {
        println!(
            "{n:>4} {:>12.6e} {:>12.6e} {:>12.8} {:>12.8}",
            riesz_normalization(n),
            second_order_normalization(n),
            dimensional_constant(n)?,
            unit_level_volume(n)?,
        );
    }
    let k = KernelSpec::second_order_riesz(3, 1, 2)?;
    println!("R_12 on R^3: K(1,1,0) = {:.6}", k.eval(&[1.0, 1.0, 0.0])?);
    Ok(())
}
