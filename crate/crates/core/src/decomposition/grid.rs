use serde::{Deserialize, Serialize};

use super::dyadic::{CellSet, DyadicCube};
use crate::error::{Error, Result};

/// A nonnegative function that is constant on the level-`level` dyadic cells
/// of a rectangular block and zero elsewhere.
///
/// Values are stored row-major (last coordinate fastest) over the block
/// `origin[i] ≤ m_i < origin[i] + shape[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct GridFunction {
    dim: usize,
    level: i32,
    origin: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// `{"n": int, "L": int, "box": {"origin": [int; n], "shape": [int; n]}, "values": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub n: usize,
    #[serde(rename = "L")]
    pub level: i32,
    #[serde(rename = "box")]
    pub block: GridBox,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridBox {
    pub origin: Vec<i64>,
    pub shape: Vec<usize>,
}

impl TryFrom<GridFile> for GridFunction {
    type Error = Error;
    fn try_from(f: GridFile) -> Result<Self> {
        GridFunction::new(f.n, f.level, f.block.origin, f.block.shape, f.values)
    }
}

impl From<GridFunction> for GridFile {
    fn from(g: GridFunction) -> Self {
        GridFile {
            n: g.dim,
            level: g.level,
            block: GridBox {
                origin: g.origin,
                shape: g.shape,
            },
            values: g.values,
        }
    }
}

impl GridFunction {
    pub fn new(dim: usize, level: i32, origin: Vec<i64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::construction("dimension must be positive"));
        }
        if origin.len() != dim || shape.len() != dim {
            return Err(Error::construction("box origin and shape need n entries"));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::construction(format!(
                "expected {expected} cell values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::construction(format!(
                "grid values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self {
            dim,
            level,
            origin,
            shape,
            values,
        })
    }

    pub fn zeros(dim: usize, level: i32, origin: Vec<i64>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self::new(dim, level, origin, shape, vec![0.0; len]).expect("zero grid is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid functions always serialize")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `2^{-level·n}`.
    pub fn cell_volume(&self) -> f64 {
        2f64.powi(-self.level * self.dim as i32)
    }

    fn index_of(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ((&c, &o), &s) in coords.iter().zip(&self.origin).zip(&self.shape) {
            let off = c - o;
            if off < 0 || off >= s as i64 {
                return None;
            }
            idx = idx * s + off as usize;
        }
        Some(idx)
    }

    fn coords_of(&self, mut idx: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            let s = self.shape[axis];
            c[axis] = self.origin[axis] + (idx % s) as i64;
            idx /= s;
        }
        c
    }

    /// Value on the level-`level` cell `coords`; zero outside the block.
    pub fn value_at(&self, coords: &[i64]) -> f64 {
        self.index_of(coords).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, coords: &[i64], value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::domain("grid values must be finite and nonnegative"));
        }
        let i = self
            .index_of(coords)
            .ok_or_else(|| Error::domain(format!("cell {coords:?} outside the grid block")))?;
        self.values[i] = value;
        Ok(())
    }

    /// Every cell of the block with its value, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.coords_of(i), v))
    }

    /// Cells with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.cells().filter(|(_, v)| *v != 0.0)
    }

    /// `‖f‖_1 = Σ value · 2^{-level·n}`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `‖f‖_∞`.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `{f > λ}` as a cell set.
    pub fn superlevel_set(&self, lambda: f64) -> CellSet {
        CellSet::new(
            self.dim,
            self.level,
            self.cells().filter(|(_, v)| *v > lambda).map(|(c, _)| c),
        )
        .expect("cells come from a valid grid")
    }

    /// Dyadic cube of a block cell.
    pub fn cell_cube(&self, coords: &[i64]) -> DyadicCube {
        DyadicCube::new(self.level, coords.to_vec())
    }

    /// `f·χ_Q` as a grid function on `Q` (at level `max(level, Q.level)`).
    pub fn restrict_to_cube(&self, cube: &DyadicCube) -> GridFunction {
        if cube.level >= self.level {
            let v = self.value_at(&cube.ancestor(self.level).coords);
            GridFunction::new(self.dim, cube.level, cube.coords.clone(), vec![1; self.dim], vec![v])
                .expect("single cell restriction is valid")
        } else {
            let depth = (self.level - cube.level) as u32;
            let side = 1usize << depth;
            let origin: Vec<i64> = cube.coords.iter().map(|&m| m << depth).collect();
            let mut g = GridFunction::zeros(self.dim, self.level, origin, vec![side; self.dim]);
            for (i, v) in g.values.iter_mut().enumerate() {
                let c = g_coords(&cube.coords, depth, side, self.dim, i);
                *v = self.value_at(&c);
            }
            g
        }
    }

    /// Copy of `f` with the given cells set to zero.
    pub fn without_cells(&self, cells: &CellSet) -> GridFunction {
        let mut g = self.clone();
        for c in cells.cells() {
            if let Some(i) = g.index_of(c) {
                g.values[i] = 0.0;
            }
        }
        g
    }
}

fn g_coords(cube: &[i64], depth: u32, side: usize, dim: usize, mut idx: usize) -> Vec<i64> {
    let mut c = vec![0i64; dim];
    for axis in (0..dim).rev() {
        c[axis] = (cube[axis] << depth) + (idx % side) as i64;
        idx /= side;
    }
    c
}
