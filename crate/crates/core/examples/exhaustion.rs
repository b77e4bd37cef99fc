//! Measure-matched exhaustion of overlapping masses and the auxiliary function h.

use riesz_lab::constructions::{build_exhaustion, eval_h};
use riesz_lab::{KernelSpec, McOptions, PointMassMeasure};

fn main() -> riesz_lab::Result<()> {
    let nu = PointMassMeasure::from_pairs(2, [(1.0, vec![0.0, 0.0]), (0.6, vec![0.3, 0.0]), (0.9, vec![0.0, 0.4])])?;
    let e = build_exhaustion(&nu, 1.0, McOptions::new(100_000, 2))?;
    for s in &e.sets {
        println!("E_{}: r = {:.6}, |E| = {:.6} ± {:.6} (target {:.6})", s.k, s.radius, s.volume, s.standard_error, s.target);
    }
    let check = e.check(&nu);
    println!("|union| = {:.6} ± {:.6}, |nu|/lambda = {:.6}", check.union_volume, check.union_standard_error, check.expected);
    let spec = KernelSpec::riesz(2, 1)?;
    for x in [[2.0, 0.0], [5.0, 1.0], [20.0, 0.0]] {
        let h = eval_h(&spec, &e, &x, McOptions::new(100_000, 3))?;
        println!("h({x:?}) = {:.6} ± {:.6} over {} sets", h.value, h.standard_error, h.terms);
    }
    Ok(())
}
