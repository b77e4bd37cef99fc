//! Dyadic machinery: cubes, cell sets, grid functions, the dimensional Whitney
//! decomposition and the Calderón–Zygmund split built on it.
//!
//! Open sets are finite unions of half-open dyadic cells of a fixed level, so
//! every geometric quantity used here (measures, box distances, separation
//! predicates) is computed in exact integer arithmetic.

mod cz;
mod dyadic;
mod grid;
mod whitney;

pub use cz::{cz_decompose, BadPiece, CzDecomposition, CzReport};
pub use dyadic::{CellSet, DyadicCube};
pub use grid::GridFunction;
pub use whitney::{separation_holds, whitney_decompose, WhitneyDecomposition};
