//! Calderón–Zygmund split of a bumpy grid function on the line.

use riesz_lab::decomposition::{cz_decompose, GridFunction};

fn main() -> riesz_lab::Result<()> {
    let values: Vec<f64> = (0..32).map(|k| if (10..14).contains(&k) { 6.0 } else { 0.5 + 0.1 * (k % 3) as f64 }).collect();
    let f = GridFunction::new(1, 2, vec![0], vec![32], values)?;
    let cz = cz_decompose(&f, 2.0, 8)?;
    println!("|U| = {}, pieces = {}", cz.exceptional_set.measure(), cz.pieces.len());
    for p in cz.pieces.iter().take(6) {
        println!("  cube level {:>2} at {:?}: mass {:.4}{}", p.cube.level, p.cube.coords, p.mass, if p.residual { " (residual)" } else { "" });
    }
    println!("sup g = {}, all properties hold: {}", cz.good.sup(), cz.verify(&f).all());
    Ok(())
}
