//! Homogeneous kernels `K(x) = Ω(x)/|x|^n` with `Ω` zero-homogeneous and mean zero
//! on the sphere.
//!
//! Three families are provided: the Riesz kernels `c_n x_j/|x|^{n+1}`, the
//! second-order Riesz kernels built from `x_i x_j/|x|^2` (minus `1/n` on the
//! diagonal), and the Hilbert kernel `1/(πx)` on the line. Indices are 1-based,
//! matching the usual `R_j` notation.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, McOptions, Purpose};
use crate::special::{ln_gamma, sphere_area};

/// Distance below which a point is treated as the origin.
pub const POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    Riesz { j: usize },
    SecondOrderRiesz { i: usize, j: usize },
    Hilbert,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    dim: usize,
    kind: KernelKind,
    normalization: f64,
}

/// `Γ((n+1)/2) / π^{(n+1)/2}`, the Riesz normalisation.
pub fn riesz_normalization(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    (ln_gamma(h) - h * PI.ln()).exp()
}

/// `Γ(n/2+1) / π^{n/2}`, the second-order Riesz normalisation.
pub fn second_order_normalization(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (ln_gamma(h + 1.0) - h * PI.ln()).exp()
}

impl KernelSpec {
    pub fn new(dim: usize, kind: KernelKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::construction("dimension must be positive"));
        }
        let check = |idx: usize| {
            if idx == 0 || idx > dim {
                Err(Error::construction(format!(
                    "index {idx} out of range 1..={dim}"
                )))
            } else {
                Ok(())
            }
        };
        let normalization = match kind {
            KernelKind::Riesz { j } => {
                check(j)?;
                riesz_normalization(dim)
            }
            KernelKind::SecondOrderRiesz { i, j } => {
                check(i)?;
                check(j)?;
                second_order_normalization(dim)
            }
            KernelKind::Hilbert => {
                if dim != 1 {
                    return Err(Error::construction(
                        "the Hilbert kernel is only defined on the line (n = 1)",
                    ));
                }
                1.0 / PI
            }
        };
        Ok(Self {
            dim,
            kind,
            normalization,
        })
    }

    pub fn riesz(dim: usize, j: usize) -> Result<Self> {
        Self::new(dim, KernelKind::Riesz { j })
    }

    pub fn second_order_riesz(dim: usize, i: usize, j: usize) -> Result<Self> {
        Self::new(dim, KernelKind::SecondOrderRiesz { i, j })
    }

    pub fn hilbert() -> Self {
        Self::new(1, KernelKind::Hilbert).expect("n = 1 is valid for the Hilbert kernel")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// True when `Ω(-x) = -Ω(x)`.
    pub fn is_odd(&self) -> bool {
        !matches!(self.kind, KernelKind::SecondOrderRiesz { .. })
    }

    /// True for the odd first-order kernels (Riesz, Hilbert), whose level sets
    /// of a single mass have a closed-form description.
    pub fn is_first_order(&self) -> bool {
        self.is_odd()
    }

    /// The un-normalised profile (`x_j/|x|`, `x_i x_j/|x|^2`, or `x_j^2/|x|^2 - 1/n`)
    /// evaluated at `x` with `|x|^2 = r2`.
    #[inline]
    fn profile_with_r2(&self, x: &[f64], r2: f64) -> f64 {
        match self.kind {
            KernelKind::Riesz { j } => x[j - 1] / r2.sqrt(),
            KernelKind::Hilbert => x[0] / r2.sqrt(),
            KernelKind::SecondOrderRiesz { i, j } if i == j => {
                x[j - 1] * x[j - 1] / r2 - 1.0 / self.dim as f64
            }
            KernelKind::SecondOrderRiesz { i, j } => x[i - 1] * x[j - 1] / r2,
        }
    }

    /// `Ω(x)` for `x ≠ 0`, including the normalisation constant.
    pub fn omega(&self, x: &[f64]) -> f64 {
        let r2 = norm2(x);
        self.normalization * self.profile_with_r2(x, r2)
    }

    /// `K(x)` without validating `x`; callers guarantee `x ≠ 0`.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let r2 = norm2(x);
        let r = r2.sqrt();
        self.normalization * self.profile_with_r2(x, r2) / r.powi(self.dim as i32)
    }

    /// `K(x) = Ω(x/|x|)/|x|^n`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Gradient of the un-normalised profile of `Ω` at `x`.
    pub fn omega_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let r2 = norm2(x);
        let mut g = vec![0.0; self.dim];
        match self.kind {
            KernelKind::Riesz { j } => {
                // ∂_k (x_j/|x|) = δ_kj/|x| - x_k x_j/|x|^3
                let r = r2.sqrt();
                let r3 = r2 * r;
                let xj = x[j - 1];
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk = -x[k] * xj / r3;
                }
                g[j - 1] += 1.0 / r;
            }
            KernelKind::Hilbert => {}
            KernelKind::SecondOrderRiesz { i, j } if i == j => {
                // ∂_k (x_i^2/|x|^2) = 2δ_ki x_i/|x|^2 - 2 x_i^2 x_k/|x|^4
                let xi = x[i - 1];
                let r4 = r2 * r2;
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk = -2.0 * xi * xi * x[k] / r4;
                }
                g[i - 1] += 2.0 * xi / r2;
            }
            KernelKind::SecondOrderRiesz { i, j } => {
                // ∂_k (x_i x_j/|x|^2) = (δ_ki x_j + δ_kj x_i)/|x|^2 - 2 x_i x_j x_k/|x|^4
                let (xi, xj) = (x[i - 1], x[j - 1]);
                let r4 = r2 * r2;
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk = -2.0 * xi * xj * x[k] / r4;
                }
                g[i - 1] += xj / r2;
                g[j - 1] += xi / r2;
            }
        }
        Ok(g)
    }

    /// The un-normalised profile at `x ≠ 0` (the function whose gradient
    /// [`omega_gradient`](Self::omega_gradient) returns).
    pub fn profile(&self, x: &[f64]) -> f64 {
        self.profile_with_r2(x, norm2(x))
    }

    /// `sup_{θ ∈ S^{n-1}} |Ω(θ)|`, in closed form.
    pub fn sphere_sup(&self) -> f64 {
        let n = self.dim as f64;
        match self.kind {
            KernelKind::Riesz { .. } | KernelKind::Hilbert => self.normalization,
            KernelKind::SecondOrderRiesz { i, j } if i == j => {
                self.normalization * (1.0 - 1.0 / n).max(1.0 / n)
            }
            KernelKind::SecondOrderRiesz { .. } => 0.5 * self.normalization,
        }
    }

    /// `∫_{S^{n-1}} |Ω| dσ` in closed form where known, otherwise the proven upper bound.
    pub fn sphere_l1_norm(&self) -> SphereNorm {
        match self.kind {
            KernelKind::Riesz { .. } | KernelKind::Hilbert => SphereNorm {
                value: FRAC_2_PI,
                is_upper_bound: false,
            },
            KernelKind::SecondOrderRiesz { i, j } => SphereNorm {
                value: if i == j { 2.0 } else { 1.0 },
                is_upper_bound: true,
            },
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::domain(format!(
                "point has {} coordinates, kernel dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if norm2(x).sqrt() < POLE_TOLERANCE {
            return Err(Error::domain("kernel evaluated at the origin"));
        }
        Ok(())
    }
}

/// Closed-form sphere norm, flagged when only an upper bound is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNorm {
    pub value: f64,
    pub is_upper_bound: bool,
}

/// Monte Carlo estimate of an integral over `S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereIntegralEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
}

impl SphereIntegralEstimate {
    /// `|value - target| ≤ k·SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        rng::within_se(self.value, target, self.standard_error, k)
    }
}

#[inline]
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

const MIN_SPHERE_SAMPLES: u64 = 1000;

fn sphere_estimate<F>(spec: &KernelSpec, opts: McOptions, tag: u64, g: F) -> Result<SphereIntegralEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if opts.samples < MIN_SPHERE_SAMPLES {
        return Err(Error::domain(format!(
            "sphere integrals need at least {MIN_SPHERE_SAMPLES} samples"
        )));
    }
    let n = spec.dim;
    let m = rng::chunked_moments(opts.samples, |i| {
        let mut rng = rng::stream(opts.seed, Purpose::Sphere, tag, i);
        let mut theta = vec![0.0; n];
        rng::unit_sphere_point(&mut rng, &mut theta);
        g(&theta)
    });
    let area = sphere_area(n);
    Ok(SphereIntegralEstimate {
        value: area * m.mean(),
        standard_error: area * m.standard_error(),
        samples: opts.samples,
    })
}

/// Monte Carlo `∫_{S^{n-1}} |Ω| dσ`.
pub fn sphere_l1_norm_mc(spec: &KernelSpec, opts: McOptions) -> Result<SphereIntegralEstimate> {
    sphere_estimate(spec, opts, 0, |t| spec.omega(t).abs())
}

/// Monte Carlo `∫_{S^{n-1}} Ω dσ`, which vanishes for every admissible kernel.
pub fn sphere_mean_zero_check(spec: &KernelSpec, opts: McOptions) -> Result<SphereIntegralEstimate> {
    sphere_estimate(spec, opts, 1, |t| spec.omega(t))
}

/// Estimate of `∫|Ω(θ - ξδ) - Ω(θ)| dσ / (n δ ∫|Ω| dσ)`.
///
/// `θ - ξδ` is not projected back to the sphere; `Ω` is zero-homogeneous so it
/// is evaluated there directly. Numerator and denominator share samples.
pub fn lipschitz_condition_ratio(
    spec: &KernelSpec,
    xi: &[f64],
    delta: f64,
    opts: McOptions,
) -> Result<f64> {
    let n = spec.dim;
    if xi.len() != n {
        return Err(Error::domain("direction has the wrong dimension"));
    }
    if (norm2(xi).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::domain("direction must be a unit vector"));
    }
    if !(delta > 0.0 && delta < 1.0 / n as f64) {
        return Err(Error::domain(format!(
            "delta = {delta} outside (0, 1/n) for n = {n}"
        )));
    }
    if opts.samples < MIN_SPHERE_SAMPLES {
        return Err(Error::domain(format!(
            "sphere integrals need at least {MIN_SPHERE_SAMPLES} samples"
        )));
    }
    let [num, den] = rng::chunked_moments_multi(opts.samples, |i| {
        let mut rng = rng::stream(opts.seed, Purpose::Sphere, 2, i);
        let mut theta = vec![0.0; n];
        rng::unit_sphere_point(&mut rng, &mut theta);
        let base = spec.omega(&theta);
        let shifted: Vec<f64> = theta.iter().zip(xi).map(|(t, s)| t - s * delta).collect();
        [(spec.omega(&shifted) - base).abs(), base.abs()]
    });
    if den.mean() == 0.0 {
        return Ok(0.0);
    }
    Ok(num.mean() / (n as f64 * delta * den.mean()))
}

/// Largest deviation between [`KernelSpec::omega_gradient`] and a central
/// difference of the profile, over `points` random points with `|x| ∈ [1/2, 2]`.
/// Deviations are relative to `max(1, |∇|)`.
pub fn gradient_fd_error(spec: &KernelSpec, points: u64, seed: u64) -> Result<f64> {
    let n = spec.dim;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let mut rng = rng::stream(seed, Purpose::Sphere, 3, i);
        let mut x = vec![0.0; n];
        rng::unit_sphere_point(&mut rng, &mut x);
        let radius = 0.5 + 1.5 * rand::Rng::random::<f64>(&mut rng);
        x.iter_mut().for_each(|v| *v *= radius);
        let g = spec.omega_gradient(&x)?;
        let scale = norm2(&g).sqrt().max(1.0);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (spec.profile(&xp) - spec.profile(&xm)) / (2.0 * h);
            worst = worst.max((fd - g[k]).abs() / scale);
        }
    }
    Ok(worst)
}

/// `|B(0,1)| Γ((n+1)/2)/π^{(n+1)/2} = 2Γ((n+1)/2)/(n Γ(n/2) √π)`, the level-set
/// bound for one unit mass; behaves like `√(2/(πn))` for large `n`.
pub fn dimensional_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    let nf = n as f64;
    let ln = std::f64::consts::LN_2 + ln_gamma((nf + 1.0) / 2.0)
        - nf.ln()
        - ln_gamma(nf / 2.0)
        - 0.5 * PI.ln();
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kernel_point_values() {
        let r = KernelSpec::riesz(2, 1).unwrap();
        assert!(close(r.eval(&[1.0, 0.0]).unwrap(), 1.0 / (2.0 * PI), 1e-15));
        let h = KernelSpec::hilbert();
        assert!(close(h.eval(&[2.0]).unwrap(), 1.0 / (2.0 * PI), 1e-15));
        let s = KernelSpec::second_order_riesz(2, 1, 1).unwrap();
        assert!(close(s.eval(&[1.0, 0.0]).unwrap(), 1.0 / (2.0 * PI), 1e-15));
        let s = KernelSpec::second_order_riesz(2, 2, 2).unwrap();
        assert!(close(s.eval(&[0.0, 1.0]).unwrap(), 1.0 / (2.0 * PI), 1e-15));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(KernelSpec::riesz(3, 0), Err(Error::Construction(_))));
        assert!(matches!(KernelSpec::riesz(3, 4), Err(Error::Construction(_))));
        assert!(matches!(
            KernelSpec::second_order_riesz(2, 1, 3),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            KernelSpec::new(2, KernelKind::Hilbert),
            Err(Error::Construction(_))
        ));
        assert!(KernelSpec::riesz(0, 1).is_err());
    }

    #[test]
    fn origin_is_a_domain_error() {
        let r = KernelSpec::riesz(3, 2).unwrap();
        assert!(matches!(r.eval(&[0.0; 3]), Err(Error::Domain(_))));
        assert!(matches!(r.omega_gradient(&[0.0; 3]), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_norms_at_axes() {
        let norm = |v: Vec<f64>| norm2(&v).sqrt();
        let r = KernelSpec::riesz(4, 2).unwrap();
        assert!(close(norm(r.omega_gradient(&[0.0, 1.0, 0.0, 0.0]).unwrap()), 0.0, 1e-15));
        assert!(close(norm(r.omega_gradient(&[1.0, 0.0, 0.0, 0.0]).unwrap()), 1.0, 1e-15));
        let s = KernelSpec::second_order_riesz(3, 1, 1).unwrap();
        assert!(close(norm(s.omega_gradient(&[1.0, 0.0, 0.0]).unwrap()), 0.0, 1e-15));
        // On the unit sphere |∇(x_i^2/|x|^2)| = 2|x_i|·sqrt(1 - x_i^2), which is 1 at x_i = 1/√2.
        let x = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        assert!(close(norm(s.omega_gradient(&x).unwrap()), 1.0, 1e-14));
    }

    #[test]
    fn sphere_sup_bounds_omega() {
        for spec in [
            KernelSpec::riesz(3, 1).unwrap(),
            KernelSpec::second_order_riesz(3, 1, 2).unwrap(),
            KernelSpec::second_order_riesz(3, 2, 2).unwrap(),
            KernelSpec::second_order_riesz(2, 2, 2).unwrap(),
        ] {
            let n = spec.dim();
            let sup = spec.sphere_sup();
            let mut rng = rng::stream(11, Purpose::Test, 0, 0);
            let mut t = vec![0.0; n];
            for _ in 0..2000 {
                rng::unit_sphere_point(&mut rng, &mut t);
                assert!(spec.omega(&t).abs() <= sup * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn dimensional_constant_values() {
        assert!(close(dimensional_constant(1).unwrap(), FRAC_2_PI, 1e-14));
        let c100 = dimensional_constant(100).unwrap() * 10.0;
        assert!((0.75..=0.85).contains(&c100));
        assert!(dimensional_constant(3).unwrap() < dimensional_constant(2).unwrap());
        assert!(dimensional_constant(1_000_000).unwrap().is_finite());
        assert!(dimensional_constant(0).is_err());
    }

    #[test]
    fn lipschitz_rejects_bad_arguments() {
        let r = KernelSpec::riesz(4, 1).unwrap();
        let xi = [1.0, 0.0, 0.0, 0.0];
        let opts = McOptions::new(2000, 1);
        assert!(lipschitz_condition_ratio(&r, &xi, 0.25, opts).is_err());
        assert!(lipschitz_condition_ratio(&r, &xi, 0.0, opts).is_err());
        assert!(lipschitz_condition_ratio(&r, &[1.0, 1.0, 0.0, 0.0], 0.1, opts).is_err());
        assert!(lipschitz_condition_ratio(&r, &xi, 0.1, McOptions::new(10, 1)).is_err());
    }

    #[test]
    fn hilbert_lipschitz_ratio_vanishes() {
        let h = KernelSpec::hilbert();
        let r = lipschitz_condition_ratio(&h, &[1.0], 0.5, McOptions::new(2000, 3)).unwrap();
        assert_eq!(r, 0.0);
    }
}
