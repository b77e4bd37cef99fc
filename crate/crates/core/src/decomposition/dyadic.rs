use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The half-open cube `Π_i [m_i 2^{-k}, (m_i + 1) 2^{-k})`.
///
/// Ordering is by level, then coordinates, which is the canonical output order
/// of the decompositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub coords: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, coords: Vec<i64>) -> Self {
        Self { level, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn diam(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side()
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&m| m as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&m| (m as f64 + 0.5) * s).collect()
    }

    pub fn parent(&self) -> Self {
        self.ancestor(self.level - 1)
    }

    /// The cube of level `level ≤ self.level` containing `self`.
    pub fn ancestor(&self, level: i32) -> Self {
        assert!(level <= self.level, "ancestor level must not exceed own level");
        let shift = (self.level - level) as u32;
        Self {
            level,
            coords: self.coords.iter().map(|&m| m >> shift).collect(),
        }
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// Dyadic cubes are either nested or disjoint.
    pub fn is_disjoint(&self, other: &DyadicCube) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Integer corners `(lo, hi)` of the closed cube in units of `2^{-resolution}`.
    pub(crate) fn units(&self, resolution: i32) -> (Vec<i128>, Vec<i128>) {
        assert!(resolution >= self.level);
        let scale = 1i128 << (resolution - self.level) as u32;
        let lo: Vec<i128> = self.coords.iter().map(|&m| m as i128 * scale).collect();
        let hi = lo.iter().map(|l| l + scale).collect();
        (lo, hi)
    }

    /// All `2^{n·depth}` descendants `depth` levels below, in row-major order.
    pub fn descendants(&self, depth: u32) -> Vec<DyadicCube> {
        let n = self.dim();
        let per_axis = 1i64 << depth;
        let base: Vec<i64> = self.coords.iter().map(|&m| m << depth).collect();
        let total = (per_axis as usize).pow(n as u32);
        let mut out = Vec::with_capacity(total);
        let mut offs = vec![0i64; n];
        for _ in 0..total {
            out.push(DyadicCube::new(
                self.level + depth as i32,
                base.iter().zip(&offs).map(|(b, o)| b + o).collect(),
            ));
            for axis in (0..n).rev() {
                offs[axis] += 1;
                if offs[axis] < per_axis {
                    break;
                }
                offs[axis] = 0;
            }
        }
        out
    }
}

/// A finite union of half-open level-`level` dyadic cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CellSetFile", into = "CellSetFile")]
pub struct CellSet {
    dim: usize,
    level: i32,
    cells: BTreeSet<Vec<i64>>,
}

/// `{"n": int, "level": int, "cells": [[int; n], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSetFile {
    pub n: usize,
    pub level: i32,
    pub cells: Vec<Vec<i64>>,
}

impl TryFrom<CellSetFile> for CellSet {
    type Error = Error;
    fn try_from(f: CellSetFile) -> Result<Self> {
        CellSet::new(f.n, f.level, f.cells)
    }
}

impl From<CellSet> for CellSetFile {
    fn from(s: CellSet) -> Self {
        CellSetFile {
            n: s.dim,
            level: s.level,
            cells: s.cells.into_iter().collect(),
        }
    }
}

impl CellSet {
    pub fn new<I: IntoIterator<Item = Vec<i64>>>(dim: usize, level: i32, cells: I) -> Result<Self> {
        if dim == 0 {
            return Err(Error::construction("dimension must be positive"));
        }
        let cells: BTreeSet<Vec<i64>> = cells.into_iter().collect();
        if let Some(bad) = cells.iter().find(|c| c.len() != dim) {
            return Err(Error::construction(format!(
                "cell {bad:?} does not have {dim} coordinates"
            )));
        }
        Ok(Self { dim, level, cells })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.cells.iter()
    }

    pub fn cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        self.cells.iter().map(|c| DyadicCube::new(self.level, c.clone()))
    }

    pub fn contains_cell(&self, coords: &[i64]) -> bool {
        self.cells.contains(coords)
    }

    /// `Q ⊆ U` for a dyadic cube of any level.
    pub fn contains_cube(&self, cube: &DyadicCube) -> bool {
        if cube.level >= self.level {
            return self.cells.contains(&cube.ancestor(self.level).coords);
        }
        let depth = (self.level - cube.level) as u32;
        let count = 1u128 << (depth as usize * self.dim).min(127);
        if count > self.cells.len() as u128 {
            return false;
        }
        cube.descendants(depth)
            .iter()
            .all(|d| self.cells.contains(&d.coords))
    }

    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * 2f64.powi(-self.level * self.dim as i32)
    }
}
