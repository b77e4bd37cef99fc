//! Calderón–Zygmund split of a nonnegative grid function at height `λ`.
//!
//! `U = {f > λ}` is decomposed into Whitney cubes `Q_k`; the good part is
//! `g = f·χ_{ℝ^n∖U}`, the bad pieces are `b_k = f·χ_{Q_k}` and each is replaced by
//! the point mass `a_k δ_{c_k}` with `a_k = ∫ b_k` and `c_k` the center of `Q_k`.
//! Residual cells of the truncated Whitney decomposition become bad pieces too.

use std::collections::HashMap;

use serde::Serialize;

use super::dyadic::{CellSet, DyadicCube};
use super::grid::GridFunction;
use super::whitney::{whitney_decompose, WhitneyDecomposition};
use crate::error::{Error, Result};
use crate::measures::{PointMass, PointMassMeasure};
use crate::special::exact_sum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadPiece {
    pub cube: DyadicCube,
    /// `f·χ_Q` on `Q`, at level `max(L, level(Q))`.
    pub function: GridFunction,
    pub mass: f64,
    pub center: Vec<f64>,
    /// True for a leftover cell of the truncated Whitney decomposition.
    pub residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub max_depth: i32,
    pub exceptional_set: CellSet,
    pub good: GridFunction,
    pub pieces: Vec<BadPiece>,
    /// `ν_N = Σ a_k δ_{c_k}`; `None` when `U` is empty.
    pub measure: Option<PointMassMeasure>,
    /// Measure of the residual cells.
    pub residual_measure: f64,
}

/// Outcome of [`CzDecomposition::verify`]. Every flag is decided exactly,
/// except `measure_matches_bad_part`, which allows for the rounding of each
/// `a_k` to the nearest double.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CzReport {
    pub good_bounded: bool,
    pub good_l1_bounded: bool,
    pub cube_measure_bounded: bool,
    pub bad_l1_bounded: bool,
    pub chebyshev: bool,
    pub reconstruction: bool,
    pub masses_bounded: bool,
    pub measure_matches_bad_part: bool,
}

impl CzReport {
    pub fn all(&self) -> bool {
        self.good_bounded
            && self.good_l1_bounded
            && self.cube_measure_bounded
            && self.bad_l1_bounded
            && self.chebyshev
            && self.reconstruction
            && self.masses_bounded
            && self.measure_matches_bad_part
    }
}

pub fn cz_decompose(f: &GridFunction, lambda: f64, max_depth: i32) -> Result<CzDecomposition> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let u = f.superlevel_set(lambda);
    let good = f.without_cells(&u);
    if u.is_empty() {
        return Ok(CzDecomposition {
            lambda,
            max_depth,
            exceptional_set: u,
            good,
            pieces: Vec::new(),
            measure: None,
            residual_measure: 0.0,
        });
    }
    let w: WhitneyDecomposition = whitney_decompose(&u, max_depth)?;
    let residual_measure = w.residual_measure();
    let pieces: Vec<BadPiece> = w
        .cubes
        .into_iter()
        .map(|q| (q, false))
        .chain(w.residual.into_iter().map(|q| (q, true)))
        .map(|(cube, residual)| {
            let function = f.restrict_to_cube(&cube);
            BadPiece {
                mass: function.integral(),
                center: cube.center(),
                function,
                cube,
                residual,
            }
        })
        .collect();
    let measure = PointMassMeasure::new(
        f.dim(),
        pieces
            .iter()
            .map(|p| PointMass {
                mass: p.mass,
                center: p.center.clone(),
            })
            .collect(),
    )?;
    Ok(CzDecomposition {
        lambda,
        max_depth,
        exceptional_set: u,
        good,
        pieces,
        measure: Some(measure),
        residual_measure,
    })
}

fn weighted(g: &GridFunction) -> impl Iterator<Item = f64> + '_ {
    let vol = g.cell_volume();
    g.values().iter().map(move |v| v * vol)
}

impl CzDecomposition {
    /// Recomputes the defining properties from scratch against `f`.
    pub fn verify(&self, f: &GridFunction) -> CzReport {
        let lambda = self.lambda;
        let f_l1: Vec<f64> = weighted(f).collect();
        let b_l1: Vec<f64> = self.pieces.iter().flat_map(|p| weighted(&p.function)).collect();
        // Sign of `‖f‖₁ − Σ terms`, decided exactly.
        let dominated = |terms: &mut dyn Iterator<Item = f64>| {
            exact_sum(f_l1.iter().copied().chain(terms.map(|t| -t))) >= 0.0
        };

        let good_bounded = self.good.sup() <= lambda;
        let good_l1_bounded = dominated(&mut weighted(&self.good));
        let cube_measure_bounded = dominated(&mut self.pieces.iter().map(|p| lambda * p.cube.volume()));
        let bad_l1_bounded = dominated(&mut b_l1.iter().copied());
        let chebyshev = dominated(&mut self.exceptional_set.cubes().map(|q| lambda * q.volume()));
        let masses_bounded = dominated(&mut self.pieces.iter().map(|p| p.mass));

        let b_total = exact_sum(b_l1.iter().copied());
        let nu_total = self.measure.as_ref().map_or(0.0, |m| exact_sum(m.masses().iter().map(|p| p.mass)));
        let measure_matches_bad_part =
            (nu_total - b_total).abs() <= f64::EPSILON * b_total * (1.0 + self.pieces.len() as f64).log2().max(1.0);

        CzReport {
            good_bounded,
            good_l1_bounded,
            cube_measure_bounded,
            bad_l1_bounded,
            chebyshev,
            reconstruction: self.reconstructs(f),
            masses_bounded,
            measure_matches_bad_part,
        }
    }

    /// `g + Σ b_k = f` on every cell of `f`.
    fn reconstructs(&self, f: &GridFunction) -> bool {
        let level = f.level();
        let n = f.dim();
        let finest = self.pieces.iter().map(|p| p.cube.level).max().unwrap_or(level).max(level);
        let units = |l: i32| -> u128 { 1u128 << ((finest - l) as usize * n) };
        let mut covered: HashMap<Vec<i64>, u128> = HashMap::new();
        for p in &self.pieces {
            for (coords, v) in p.function.cells() {
                let parent = DyadicCube::new(p.function.level(), coords).ancestor(level);
                if v != f.value_at(&parent.coords) {
                    return false;
                }
                *covered.entry(parent.coords).or_default() += units(p.function.level());
            }
        }
        for (coords, v) in f.cells() {
            let in_u = self.exceptional_set.contains_cell(&coords);
            let g = self.good.value_at(&coords);
            let c = covered.remove(&coords).unwrap_or(0);
            let ok = if in_u { g == 0.0 && c == units(level) } else { g == v && c == 0 };
            if !ok {
                return false;
            }
        }
        covered.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decompositions always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(n: usize, level: i32, height: f64) -> GridFunction {
        let side = 1usize << level;
        GridFunction::new(n, level, vec![0; n], vec![side; n], vec![height; side.pow(n as u32)]).unwrap()
    }

    #[test]
    fn twice_lambda_on_unit_cube() {
        let lambda = 1.5;
        let f = indicator(2, 0, 2.0 * lambda);
        let cz = cz_decompose(&f, lambda, 5).unwrap();
        assert_eq!(cz.exceptional_set.measure(), 1.0);
        assert_eq!(cz.good.sup(), 0.0);
        let total: f64 = cz.pieces.iter().map(|p| p.cube.volume()).sum();
        assert_eq!(total, 1.0);
        assert!(total <= f.integral() / lambda);
        assert!(cz.verify(&f).all());
    }

    #[test]
    fn below_lambda_is_all_good() {
        let f = indicator(1, 2, 0.5);
        let cz = cz_decompose(&f, 1.0, 4).unwrap();
        assert!(cz.pieces.is_empty());
        assert!(cz.measure.is_none());
        assert_eq!(cz.good, f);
        assert!(cz.verify(&f).all());
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let f = indicator(1, 0, 1.0);
        assert!(matches!(cz_decompose(&f, 0.0, 3), Err(Error::Domain(_))));
        assert!(matches!(cz_decompose(&f, f64::NAN, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn detects_tampering() {
        let f = GridFunction::new(1, 2, vec![0], vec![4], vec![0.5, 3.0, 3.0, 0.25]).unwrap();
        let mut cz = cz_decompose(&f, 1.0, 6).unwrap();
        assert!(cz.verify(&f).all());
        cz.pieces.pop();
        assert!(!cz.verify(&f).reconstruction);
    }
}
