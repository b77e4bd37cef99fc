//! Cancellation integral of a uniform density against its point-mass replacement.

use riesz_lab::constructions::cancellation_integral;
use riesz_lab::decomposition::GridFunction;
use riesz_lab::KernelSpec;

fn main() -> riesz_lab::Result<()> {
    let b = GridFunction::new(1, 0, vec![-1], vec![2], vec![0.5, 0.5])?;
    let c = cancellation_integral(&KernelSpec::hilbert(), &b, 1.0, &[0.0], 1.0, 4)?;
    println!("Hilbert: {:.10} (ratio {:.6}, cutoff {})", c.value, c.ratio, c.cutoff);

    let b2 = GridFunction::new(2, 2, vec![-1, -1], vec![2, 2], vec![1.0, 3.0, 2.0, 0.5])?;
    for depth in [2, 4, 8] {
        let c = cancellation_integral(&KernelSpec::riesz(2, 1)?, &b2, b2.integral(), &[0.0, 0.0], 0.5, depth)?;
        println!("R_1 on R^2, depth {depth}: {:.8} (ratio {:.6})", c.value, c.ratio);
    }
    Ok(())
}
