//! Whitney decomposition of an L-shaped union of unit squares.

use riesz_lab::decomposition::{separation_holds, whitney_decompose, CellSet};

fn main() -> riesz_lab::Result<()> {
    let u = CellSet::new(2, 0, [[0, 0], [1, 0], [2, 0], [0, 1], [0, 2]].map(|c| c.to_vec()))?;
    for depth in [3, 5, 7] {
        let w = whitney_decompose(&u, depth)?;
        let separated = w.cubes.iter().all(|q| separation_holds(&u, q));
        println!(
            "max depth {depth}: {} cubes covering {:.6}, residual {:.6} in {} cells, partition {}, separated {}",
            w.cubes.len(),
            w.cube_measure(),
            w.residual_measure(),
            w.residual.len(),
            w.is_partition_of(&u),
            separated
        );
    }
    Ok(())
}
