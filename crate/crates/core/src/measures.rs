//! Finite positive point-mass measures and their transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{norm2, KernelSpec, POLE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    #[serde(rename = "a")]
    pub mass: f64,
    #[serde(rename = "c")]
    pub center: Vec<f64>,
}

/// `ν = Σ a_k δ_{c_k}` with every `a_k > 0`.
///
/// Signed measures are not representable; split them into positive and
/// negative parts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct PointMassMeasure {
    dim: usize,
    masses: Vec<PointMass>,
}

/// On-disk form: `{"n": int, "masses": [{"a": float, "c": [float; n]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub n: usize,
    pub masses: Vec<PointMass>,
}

impl TryFrom<MeasureFile> for PointMassMeasure {
    type Error = Error;
    fn try_from(f: MeasureFile) -> Result<Self> {
        PointMassMeasure::new(f.n, f.masses)
    }
}

impl From<PointMassMeasure> for MeasureFile {
    fn from(m: PointMassMeasure) -> Self {
        MeasureFile {
            n: m.dim,
            masses: m.masses,
        }
    }
}

impl PointMassMeasure {
    pub fn new(dim: usize, masses: Vec<PointMass>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::construction("dimension must be positive"));
        }
        if masses.is_empty() {
            return Err(Error::construction("a measure needs at least one mass"));
        }
        for (k, m) in masses.iter().enumerate() {
            if !(m.mass.is_finite() && m.mass > 0.0) {
                return Err(Error::construction(format!(
                    "mass #{k} = {} is not a positive finite number",
                    m.mass
                )));
            }
            if m.center.len() != dim {
                return Err(Error::construction(format!(
                    "center #{k} has {} coordinates, expected {dim}",
                    m.center.len()
                )));
            }
            if m.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::construction(format!("center #{k} is not finite")));
            }
        }
        Ok(Self { dim, masses })
    }

    /// Convenience constructor from `(a_k, c_k)` pairs.
    pub fn from_pairs<I, C>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, C)>,
        C: Into<Vec<f64>>,
    {
        Self::new(
            dim,
            pairs
                .into_iter()
                .map(|(mass, c)| PointMass {
                    mass,
                    center: c.into(),
                })
                .collect(),
        )
    }

    pub fn dirac(center: Vec<f64>) -> Self {
        let dim = center.len();
        Self::new(dim, vec![PointMass { mass: 1.0, center }]).expect("unit dirac is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measures always serialize")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[PointMass] {
        &self.masses
    }

    /// `‖ν‖ = Σ a_k`.
    pub fn total_variation(&self) -> f64 {
        self.masses.iter().map(|m| m.mass).sum()
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        assert_eq!(v.len(), self.dim);
        let masses = self
            .masses
            .iter()
            .map(|m| PointMass {
                mass: m.mass,
                center: m.center.iter().zip(v).map(|(c, s)| c + s).collect(),
            })
            .collect();
        Self {
            dim: self.dim,
            masses,
        }
    }

    /// Multiplies every mass by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.masses
                .iter()
                .map(|m| PointMass {
                    mass: m.mass * t,
                    center: m.center.clone(),
                })
                .collect(),
        )
    }

    /// Multiplies every center by `delta`, keeping the masses.
    pub fn dilated(&self, delta: f64) -> Self {
        let masses = self
            .masses
            .iter()
            .map(|m| PointMass {
                mass: m.mass,
                center: m.center.iter().map(|c| c * delta).collect(),
            })
            .collect();
        Self {
            dim: self.dim,
            masses,
        }
    }

    /// Sums the masses of identical centers. Order of first appearance is kept.
    pub fn merged(&self) -> Self {
        let mut out: Vec<PointMass> = Vec::with_capacity(self.masses.len());
        for m in &self.masses {
            match out.iter_mut().find(|o| o.center == m.center) {
                Some(o) => o.mass += m.mass,
                None => out.push(m.clone()),
            }
        }
        Self {
            dim: self.dim,
            masses: out,
        }
    }

    fn check_eval(&self, spec: &KernelSpec, x: &[f64]) -> Result<()> {
        if spec.dim() != self.dim {
            return Err(Error::domain(format!(
                "kernel dimension {} does not match measure dimension {}",
                spec.dim(),
                self.dim
            )));
        }
        if x.len() != self.dim {
            return Err(Error::domain("evaluation point has the wrong dimension"));
        }
        for (index, m) in self.masses.iter().enumerate() {
            if dist2(x, &m.center).sqrt() < POLE_TOLERANCE {
                return Err(Error::Pole {
                    index,
                    tolerance: POLE_TOLERANCE,
                });
            }
        }
        Ok(())
    }

    /// `Tν(x) = Σ a_k K(x - c_k)` without pole checks.
    #[inline]
    pub(crate) fn transform_unchecked(&self, spec: &KernelSpec, x: &[f64], scratch: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for m in &self.masses {
            for ((d, xi), ci) in scratch.iter_mut().zip(x).zip(&m.center) {
                *d = xi - ci;
            }
            total += m.mass * spec.eval_unchecked(scratch);
        }
        total
    }

    /// `Tν(x) = Σ a_k K(x - c_k)`.
    pub fn transform(&self, spec: &KernelSpec, x: &[f64]) -> Result<f64> {
        self.check_eval(spec, x)?;
        let mut scratch = vec![0.0; self.dim];
        Ok(self.transform_unchecked(spec, x, &mut scratch))
    }

    /// `T^#ν(x) = sup_{ε>0} |Σ_{|x-c_k|>ε} a_k K(x - c_k)|`.
    ///
    /// The truncated sum only changes when `ε` crosses a distance `|x - c_k|`,
    /// so the supremum is a maximum over the partial sums taken from the
    /// farthest mass inward, grouping equidistant masses and starting from the
    /// empty sum.
    pub fn max_truncation(&self, spec: &KernelSpec, x: &[f64]) -> Result<f64> {
        self.check_eval(spec, x)?;
        let mut terms: Vec<(f64, f64)> = self
            .masses
            .iter()
            .map(|m| {
                let d: Vec<f64> = x.iter().zip(&m.center).map(|(a, b)| a - b).collect();
                (norm2(&d), m.mass * spec.eval_unchecked(&d))
            })
            .collect();
        terms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = 0.0f64;
        let mut partial = 0.0;
        let mut k = 0;
        while k < terms.len() {
            let r2 = terms[k].0;
            while k < terms.len() && terms[k].0 == r2 {
                partial += terms[k].1;
                k += 1;
            }
            best = best.max(partial.abs());
        }
        Ok(best)
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Free-function form of [`PointMassMeasure::total_variation`].
pub fn total_variation(nu: &PointMassMeasure) -> f64 {
    nu.total_variation()
}

/// Free-function form of [`PointMassMeasure::transform`].
pub fn eval_transform(spec: &KernelSpec, nu: &PointMassMeasure, x: &[f64]) -> Result<f64> {
    nu.transform(spec, x)
}

/// Free-function form of [`PointMassMeasure::max_truncation`].
pub fn eval_max_truncation(spec: &KernelSpec, nu: &PointMassMeasure, x: &[f64]) -> Result<f64> {
    nu.max_truncation(spec, x)
}
