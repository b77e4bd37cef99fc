//! Dimensional Whitney decomposition of a finite union of dyadic cells.
//!
//! With `A_k = 2n√n·2^{-k}` and `U_k = {x ∈ U : A_k ≤ dist(x, U^c) < 2A_k}`,
//! the decomposition consists of the maximal dyadic cubes `Q` of level `k`
//! meeting `U_k`. Any such cube satisfies
//! `(2n-1)·diam(Q) ≤ dist(Q, U^c)`.
//!
//! Membership `Q ∩ U_k ≠ ∅` is certified by witness points: the centers of the
//! level-`max_depth` cells of `U`. Each witness `x` lies in exactly one `U_k`;
//! when `k ≤ max_depth` the level-`k` cube containing `x` is marked. Cells of
//! `U` not covered by a marked cube are returned as the residual.
//!
//! All distances are squared distances between integer boxes in units of
//! `2^{-(max_depth+1)}`, so every comparison is exact.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use super::dyadic::{CellSet, DyadicCube};
use crate::error::{Error, Result};

/// Upper bound on the number of witness cells, `|U|·2^{n(max_depth-L)}`.
const MAX_WITNESSES: u128 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhitneyDecomposition {
    pub dim: usize,
    pub cell_level: i32,
    pub max_depth: i32,
    /// Maximal Whitney cubes, sorted by level then coordinates.
    pub cubes: Vec<DyadicCube>,
    /// Level-`max_depth` cells of `U` not covered by `cubes`, sorted.
    pub residual: Vec<DyadicCube>,
}

impl WhitneyDecomposition {
    pub fn cube_measure(&self) -> f64 {
        self.cubes.iter().fold(0.0, |acc, q| acc + q.volume())
    }

    pub fn residual_measure(&self) -> f64 {
        self.residual.len() as f64 * 2f64.powi(-self.max_depth * self.dim as i32)
    }

    /// Checks, in exact integer arithmetic, that cubes and residual cells are
    /// pairwise disjoint, contained in `u`, and exhaust it.
    pub fn is_partition_of(&self, u: &CellSet) -> bool {
        let all: Vec<&DyadicCube> = self.cubes.iter().chain(&self.residual).collect();
        if !all.iter().all(|q| u.contains_cube(q)) {
            return false;
        }
        let set: HashSet<&DyadicCube> = all.iter().copied().collect();
        if set.len() != all.len() {
            return false;
        }
        let min_level = all.iter().map(|q| q.level).min().unwrap_or(self.max_depth);
        for q in &all {
            for level in min_level..q.level {
                if set.contains(&q.ancestor(level)) {
                    return false;
                }
            }
        }
        // Disjoint subsets of U whose volumes add up to |U| cover U.
        let unit = |level: i32| -> u128 { 1u128 << ((self.max_depth - level) as usize * self.dim) };
        let covered: u128 = all.iter().map(|q| unit(q.level)).sum();
        covered == u.len() as u128 * unit(u.level())
    }
}

/// Squared distance between closed integer boxes.
fn box_dist2(alo: &[i128], ahi: &[i128], blo: &[i128], bhi: &[i128]) -> i128 {
    let mut d2 = 0;
    for i in 0..alo.len() {
        let gap = (blo[i] - ahi[i]).max(alo[i] - bhi[i]).max(0);
        d2 += gap * gap;
    }
    d2
}

fn point_box_dist2(p: &[i128], lo: &[i128], hi: &[i128]) -> i128 {
    let mut d2 = 0;
    for i in 0..p.len() {
        let gap = (lo[i] - p[i]).max(p[i] - hi[i]).max(0);
        d2 += gap * gap;
    }
    d2
}

/// Cells outside `U` that touch a cell of `U`. The nearest point of `U^c` to
/// any point of `U` lies in one of them.
fn boundary_complement(u: &CellSet) -> Vec<Vec<i64>> {
    let n = u.dim();
    let mut out = BTreeSet::new();
    let neighbours = 3usize.pow(n as u32);
    for c in u.cells() {
        for code in 0..neighbours {
            let mut m = code;
            let nb: Vec<i64> = c
                .iter()
                .map(|&x| {
                    let d = (m % 3) as i64 - 1;
                    m /= 3;
                    x + d
                })
                .collect();
            if !u.contains_cell(&nb) {
                out.insert(nb);
            }
        }
    }
    out.into_iter().collect()
}

struct Geometry {
    dim: usize,
    resolution: i32,
    complement: Vec<(Vec<i128>, Vec<i128>)>,
}

impl Geometry {
    fn new(u: &CellSet, resolution: i32) -> Self {
        let complement = boundary_complement(u)
            .into_iter()
            .map(|c| DyadicCube::new(u.level(), c).units(resolution))
            .collect();
        Self {
            dim: u.dim(),
            resolution,
            complement,
        }
    }

    /// `dist(Q, U^c)^2` in squared units.
    fn cube_dist2(&self, q: &DyadicCube) -> i128 {
        let (lo, hi) = q.units(self.resolution);
        self.complement
            .iter()
            .map(|(clo, chi)| box_dist2(&lo, &hi, clo, chi))
            .min()
            .unwrap_or(i128::MAX)
    }

    /// `((2n-1)·diam Q)^2 = (2n-1)^2·n·4^{-k}` in squared units.
    fn separation_threshold2(&self, level: i32) -> i128 {
        let n = self.dim as i128;
        (2 * n - 1) * (2 * n - 1) * n * (1i128 << (2 * (self.resolution - level)) as u32)
    }
}

/// `(2n-1)·diam(Q) ≤ dist(Q, ℝ^n∖U)`, evaluated exactly at the finest
/// resolution that represents both `Q` and the cells of `U`.
pub fn separation_holds(u: &CellSet, cube: &DyadicCube) -> bool {
    let resolution = cube.level.max(u.level()) + 1;
    let geo = Geometry::new(u, resolution);
    geo.cube_dist2(cube) >= geo.separation_threshold2(cube.level)
}

/// Whitney decomposition of `u`, truncated at level `max_depth`.
pub fn whitney_decompose(u: &CellSet, max_depth: i32) -> Result<WhitneyDecomposition> {
    if u.is_empty() {
        return Err(Error::domain("cannot decompose an empty set"));
    }
    let level = u.level();
    if max_depth < level {
        return Err(Error::domain(format!(
            "max_depth {max_depth} is coarser than the cell level {level}"
        )));
    }
    let n = u.dim();
    let depth = (max_depth - level) as u32;
    let per_cell = 1u128 << (depth as usize * n).min(127);
    if per_cell.saturating_mul(u.len() as u128) > MAX_WITNESSES {
        return Err(Error::domain(format!(
            "max_depth {max_depth} needs more than {MAX_WITNESSES} witness cells"
        )));
    }
    let resolution = max_depth + 1;
    let geo = Geometry::new(u, resolution);
    let base = 4 * (n as i128).pow(3);

    let cells: Vec<DyadicCube> = u.cubes().collect();
    let marks: Vec<Vec<DyadicCube>> = cells
        .par_iter()
        .map(|cell| {
            let (clo, chi) = cell.units(resolution);
            let mut near: Vec<(i128, usize)> = geo
                .complement
                .iter()
                .enumerate()
                .map(|(i, (lo, hi))| (box_dist2(&clo, &chi, lo, hi), i))
                .collect();
            near.sort_unstable();
            let mut out = Vec::new();
            let mut witness = vec![0i128; n];
            for fine in cell.descendants(depth) {
                for (w, &m) in witness.iter_mut().zip(&fine.coords) {
                    *w = 2 * m as i128 + 1;
                }
                let mut best = i128::MAX;
                for &(lb, i) in &near {
                    if lb >= best {
                        break;
                    }
                    let (lo, hi) = &geo.complement[i];
                    best = best.min(point_box_dist2(&witness, lo, hi));
                }
                // Unique e with base·4^e ≤ dist² < base·4^{e+1}; the cube
                // level is k = resolution - e and must not exceed max_depth.
                if best < base * 4 {
                    continue;
                }
                let mut e: u32 = 1;
                while base.checked_mul(1i128 << (2 * (e + 1))).is_some_and(|t| t <= best) {
                    e += 1;
                }
                let k = resolution - e as i32;
                out.push(fine.ancestor(k));
            }
            out
        })
        .collect();

    let marked: HashSet<DyadicCube> = marks.into_iter().flatten().collect();
    let min_level = marked.iter().map(|q| q.level).min().unwrap_or(max_depth);
    let mut cubes: Vec<DyadicCube> = marked
        .iter()
        .filter(|q| (min_level..q.level).all(|l| !marked.contains(&q.ancestor(l))))
        .cloned()
        .collect();
    cubes.sort();

    for q in &cubes {
        if geo.cube_dist2(q) < geo.separation_threshold2(q.level) {
            return Err(Error::Tolerance {
                message: format!("Whitney cube {q:?} violates the separation bound"),
                best: None,
            });
        }
    }

    let covered = |fine: &DyadicCube| (min_level..=fine.level).any(|l| marked.contains(&fine.ancestor(l)));
    let mut residual: Vec<DyadicCube> = cells
        .par_iter()
        .flat_map_iter(|cell| {
            cell.descendants(depth)
                .into_iter()
                .filter(|fine| !covered(fine))
        })
        .collect();
    residual.sort();

    Ok(WhitneyDecomposition {
        dim: n,
        cell_level: level,
        max_depth,
        cubes,
        residual,
    })
}
