//! Lebesgue measure of `{|Tν| > λ}`.
//!
//! Three estimators are available:
//!
//! - on the line, positive masses make `Hν` strictly decreasing between poles,
//!   so the super-level sets are explicit unions of intervals whose total
//!   length follows from the sum of the roots of a polynomial (Vieta) or from
//!   bracketed bisection;
//! - for a single mass of a first-order kernel the set is star-shaped about the
//!   center and its volume reduces to a one-dimensional angular quadrature;
//! - in general, Monte Carlo over a union of balls that provably contains the
//!   level set.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, POLE_TOLERANCE};
use crate::measures::{dist2, PointMassMeasure};
use crate::rng::{self, McOptions, Purpose};
use crate::special::{ln_unit_ball_volume, sphere_area, GaussRule};

pub const MIN_MC_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelSetMethod {
    ExactVieta,
    ExactBisection,
    Quadrature,
    MonteCarlo,
}

impl LevelSetMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            LevelSetMethod::ExactVieta => "exact-vieta",
            LevelSetMethod::ExactBisection => "exact-bisection",
            LevelSetMethod::Quadrature => "quadrature",
            LevelSetMethod::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for LevelSetMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A measured `|{|Tν| > λ}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetEstimate {
    pub value: f64,
    /// Zero for the exact and quadrature methods.
    pub standard_error: f64,
    pub samples: u64,
    pub method: LevelSetMethod,
    pub lambda: f64,
}

impl LevelSetEstimate {
    pub fn within(&self, target: f64, k: f64) -> bool {
        rng::within_se(self.value, target, self.standard_error, k)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact solvers on the line

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HilbertMethod {
    Vieta,
    Bisection,
}

/// Measures of `{Hν > λ}`, `{Hν < -λ}` and their union.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertLevelSet {
    pub above: f64,
    pub below: f64,
    pub estimate: LevelSetEstimate,
}

/// Sorted centers and masses of a 1D measure; rejects coincident centers.
fn sorted_line_masses(nu: &PointMassMeasure) -> Result<(Vec<f64>, Vec<f64>)> {
    if nu.dim() != 1 {
        return Err(Error::domain("exact Hilbert level sets need a measure on the line"));
    }
    let mut pts: Vec<(f64, f64)> = nu.masses().iter().map(|m| (m.center[0], m.mass)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateCenters {
                center: vec![w[0].0],
            });
        }
    }
    Ok(pts.into_iter().unzip())
}

/// Coefficients (ascending degree) of `Π (x - c_i)`.
fn monic_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &c in roots {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &pk) in p.iter().enumerate() {
            next[k + 1] += pk;
            next[k] -= c * pk;
        }
        p = next;
    }
    p
}

fn vieta(centers: &[f64], masses: &[f64], lambda: f64) -> (f64, f64) {
    let n = centers.len();
    // Σ a_k Π_{i≠k}(x - c_i) - s·πλ Π_i(x - c_i) has N real roots, one per
    // pole gap plus one beyond the outermost pole; Vieta gives their sum from
    // the two leading coefficients.
    let full = monic_from_roots(centers);
    let mut numer = vec![0.0; n];
    for (k, &a) in masses.iter().enumerate() {
        let others: Vec<f64> = centers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &c)| c)
            .collect();
        for (acc, coeff) in numer.iter_mut().zip(monic_from_roots(&others)) {
            *acc += a * coeff;
        }
    }
    let pl = PI * lambda;
    let sum_poles = -full[n - 1];
    let root_sum = |s: f64| {
        let lead = -s * pl * full[n];
        let next = numer[n - 1] - s * pl * full[n - 1];
        -next / lead
    };
    let above = root_sum(1.0) - sum_poles;
    let below = sum_poles - root_sum(-1.0);
    (above, below)
}

fn hilbert_at(centers: &[f64], masses: &[f64], x: f64) -> f64 {
    centers
        .iter()
        .zip(masses)
        .map(|(c, a)| a / (x - c))
        .sum::<f64>()
        / PI
}

/// Root of the decreasing function `g` on the open interval `(lo, hi)`,
/// positive near `lo` and negative near `hi`.
fn bisect_decreasing<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, g: F) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn bisection(centers: &[f64], masses: &[f64], lambda: f64) -> (f64, f64) {
    let n = centers.len();
    let reach = masses.iter().sum::<f64>() / (PI * lambda);
    let mut above = 0.0;
    let mut below = 0.0;
    for k in 0..n {
        // {H > λ}: (c_k, root) with root in the gap to the right of c_k.
        let hi = if k + 1 < n { centers[k + 1] } else { centers[k] + reach };
        let r = bisect_decreasing(centers[k], hi, |x| hilbert_at(centers, masses, x) - lambda);
        above += r - centers[k];
        // {H < -λ}: (root, c_k) with root in the gap to the left of c_k.
        let lo = if k > 0 { centers[k - 1] } else { centers[k] - reach };
        let s = bisect_decreasing(lo, centers[k], |x| hilbert_at(centers, masses, x) + lambda);
        below += centers[k] - s;
    }
    (above, below)
}

/// Exact `|{|Hν| > λ}|` for positive masses on the line.
///
/// Coincident centers are rejected; use [`PointMassMeasure::merged`] first.
pub fn hilbert_levelset_exact(
    nu: &PointMassMeasure,
    lambda: f64,
    method: HilbertMethod,
) -> Result<HilbertLevelSet> {
    check_lambda(lambda)?;
    let (centers, masses) = sorted_line_masses(nu)?;
    let ((above, below), tag) = match method {
        HilbertMethod::Vieta => (vieta(&centers, &masses, lambda), LevelSetMethod::ExactVieta),
        HilbertMethod::Bisection => (
            bisection(&centers, &masses, lambda),
            LevelSetMethod::ExactBisection,
        ),
    };
    Ok(HilbertLevelSet {
        above,
        below,
        estimate: LevelSetEstimate {
            value: above + below,
            standard_error: 0.0,
            samples: 0,
            method: tag,
            lambda,
        },
    })
}

// ---------------------------------------------------------------------------
// One mass, any dimension

/// `∫_{S^{n-1}} |θ_j| dσ(θ)` by quadrature over the polar angle from `e_j`,
/// `|S^{n-2}| ∫_0^π |cos φ| sin^{n-2} φ dφ`.
pub fn sphere_abs_coordinate_integral(n: usize) -> f64 {
    if n == 1 {
        return 2.0;
    }
    let rule = GaussRule::new(64);
    let half = rule.integrate(0.0, FRAC_PI_2, |phi| phi.cos() * phi.sin().powi(n as i32 - 2));
    sphere_area(n - 1) * 2.0 * half
}

/// `V_n = |{x : c_n |x_j|/|x|^{n+1} > 1}|` by radial-angular quadrature.
///
/// The radial extent in direction `θ` is `(c_n |θ_j|)^{1/n}`, so
/// `V_n = (c_n/n) ∫_{S^{n-1}} |θ_j| dσ`.
pub fn unit_level_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    let c = crate::kernels::riesz_normalization(n);
    Ok(c / n as f64 * sphere_abs_coordinate_integral(n))
}

/// Closed form of [`unit_level_volume`], `2/(πn)`.
pub fn unit_level_volume_closed_form(n: usize) -> f64 {
    2.0 / (PI * n as f64)
}

/// `|{|a K(x)| > λ}| = V_n a/λ` for a first-order kernel.
pub fn single_mass_levelset_exact(spec: &KernelSpec, a: f64, lambda: f64) -> Result<LevelSetEstimate> {
    check_lambda(lambda)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("mass must be positive"));
    }
    if !spec.is_first_order() {
        return Err(Error::Unsupported(
            "single-mass quadrature covers the Riesz and Hilbert kernels only".into(),
        ));
    }
    Ok(LevelSetEstimate {
        value: unit_level_volume(spec.dim())? * (a / lambda),
        standard_error: 0.0,
        samples: 0,
        method: LevelSetMethod::Quadrature,
        lambda,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Union of balls with a sampler that is uniform on the union after
/// reweighting by the covering count.
#[derive(Debug, Clone)]
pub struct BallUnion {
    dim: usize,
    centers: Vec<Vec<f64>>,
    radii: Vec<f64>,
    volumes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BallUnion {
    /// Balls given by center and `ln |B(c, ρ)|`; the radius is recovered from
    /// the log-volume so that huge dimensions do not overflow.
    pub fn from_log_volumes(dim: usize, centers: Vec<Vec<f64>>, ln_volumes: &[f64]) -> Self {
        let ln_b1 = ln_unit_ball_volume(dim);
        let radii: Vec<f64> = ln_volumes
            .iter()
            .map(|lv| ((lv - ln_b1) / dim as f64).exp())
            .collect();
        let volumes: Vec<f64> = ln_volumes.iter().map(|lv| lv.exp()).collect();
        let total: f64 = volumes.iter().sum();
        let mut acc = 0.0;
        let cumulative = volumes
            .iter()
            .map(|v| {
                acc += v / total;
                acc
            })
            .collect();
        Self {
            dim,
            centers,
            radii,
            volumes,
            cumulative,
        }
    }

    pub fn from_radii(dim: usize, centers: Vec<Vec<f64>>, radii: &[f64]) -> Self {
        let ln_b1 = ln_unit_ball_volume(dim);
        let lv: Vec<f64> = radii.iter().map(|r| ln_b1 + dim as f64 * r.ln()).collect();
        let mut u = Self::from_log_volumes(dim, centers, &lv);
        u.radii = radii.to_vec();
        u
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// `Σ_k |B_k|`, an upper bound for the union's volume.
    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn cover_count(&self, x: &[f64]) -> usize {
        self.centers
            .iter()
            .zip(&self.radii)
            .filter(|(c, r)| dist2(x, c) <= *r * *r)
            .count()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.cover_count(x) > 0
    }

    /// Draws a ball with probability proportional to its volume, then a uniform
    /// point in it. The returned point has density `cover_count(x)/Σ|B_k|`.
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng, out: &mut [f64]) -> usize {
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1);
        rng::unit_ball_point(rng, out);
        for (o, c) in out.iter_mut().zip(&self.centers[k]) {
            *o = c + self.radii[k] * *o;
        }
        k
    }

    /// Monte Carlo `|{x ∈ ∪B_k : pred(x)}|` with standard error.
    pub fn measure<F>(&self, opts: McOptions, purpose: Purpose, tag: u64, pred: F) -> (f64, f64)
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        let m = rng::chunked_moments(opts.samples, |i| {
            let mut rng = rng::stream(opts.seed, purpose, tag, i);
            let mut x = vec![0.0; self.dim];
            self.sample(&mut rng, &mut x);
            if pred(&x) {
                1.0 / self.cover_count(&x).max(1) as f64
            } else {
                0.0
            }
        });
        let total = self.total_volume();
        (total * m.mean(), total * m.standard_error())
    }
}

/// Balls `B(c_k, ρ_k)` with `ρ_k^n = N·S·a_k/λ`, `S = sup|Ω|`. Off their union
/// every term satisfies `a_k S/|x-c_k|^n < λ/N`, so `|Tν| < λ` there.
pub fn bounding_region(spec: &KernelSpec, nu: &PointMassMeasure, lambda: f64) -> BallUnion {
    let n = nu.dim();
    let count = nu.len() as f64;
    let sup = spec.sphere_sup();
    let ln_b1 = ln_unit_ball_volume(n);
    let ln_vol: Vec<f64> = nu
        .masses()
        .iter()
        .map(|m| ln_b1 + (count * sup * m.mass / lambda).ln())
        .collect();
    let centers = nu.masses().iter().map(|m| m.center.clone()).collect();
    BallUnion::from_log_volumes(n, centers, &ln_vol)
}

/// Monte Carlo `|{|Tν| > λ}|`.
pub fn mc_levelset(
    spec: &KernelSpec,
    nu: &PointMassMeasure,
    lambda: f64,
    opts: McOptions,
) -> Result<LevelSetEstimate> {
    check_lambda(lambda)?;
    if opts.samples < MIN_MC_SAMPLES {
        return Err(Error::domain(format!(
            "Monte Carlo level sets need at least {MIN_MC_SAMPLES} samples"
        )));
    }
    if spec.dim() != nu.dim() {
        return Err(Error::domain("kernel and measure dimensions differ"));
    }
    if spec.sphere_sup() == 0.0 {
        // Ω ≡ 0 (second-order diagonal kernel on the line).
        return Ok(LevelSetEstimate {
            value: 0.0,
            standard_error: 0.0,
            samples: opts.samples,
            method: LevelSetMethod::MonteCarlo,
            lambda,
        });
    }
    let region = bounding_region(spec, nu, lambda);
    let n = nu.dim();
    let m = rng::chunked_moments(opts.samples, |i| {
        let mut rng = rng::stream(opts.seed, Purpose::LevelSet, 0, i);
        let mut x = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        loop {
            region.sample(&mut rng, &mut x);
            let near_pole = nu
                .masses()
                .iter()
                .any(|m| dist2(&x, &m.center).sqrt() < POLE_TOLERANCE);
            if near_pole {
                continue;
            }
            let cover = region.cover_count(&x);
            assert!(cover > 0, "sampled point escaped the bounding region");
            let t = nu.transform_unchecked(spec, &x, &mut scratch);
            return if t.abs() > lambda { 1.0 / cover as f64 } else { 0.0 };
        }
    });
    let total = region.total_volume();
    Ok(LevelSetEstimate {
        value: total * m.mean(),
        standard_error: total * m.standard_error(),
        samples: opts.samples,
        method: LevelSetMethod::MonteCarlo,
        lambda,
    })
}

// ---------------------------------------------------------------------------
// Weak-type functional

/// How [`weaktype_functional`] measures the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Always Monte Carlo.
    MonteCarlo(McOptions),
    /// Exact or quadrature solvers where they apply, Monte Carlo otherwise.
    PreferExact(McOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakTypeEstimate {
    /// `λ |{|Tν| > λ}| / ‖ν‖`.
    pub value: f64,
    pub standard_error: f64,
    pub level_set: LevelSetEstimate,
}

/// Exact measure of the level set when one of the closed-form solvers applies.
pub fn exact_levelset(spec: &KernelSpec, nu: &PointMassMeasure, lambda: f64) -> Result<Option<LevelSetEstimate>> {
    if !spec.is_first_order() || spec.dim() != nu.dim() {
        return Ok(None);
    }
    let merged = nu.merged();
    if spec.dim() == 1 {
        // The 1D Riesz kernel is the Hilbert kernel.
        return Ok(Some(hilbert_levelset_exact(&merged, lambda, HilbertMethod::Vieta)?.estimate));
    }
    if merged.len() == 1 {
        return Ok(Some(single_mass_levelset_exact(spec, merged.masses()[0].mass, lambda)?));
    }
    Ok(None)
}

/// `λ |{|Tν| > λ}| / ‖ν‖`, invariant under joint scaling of masses and `λ`.
pub fn weaktype_functional(
    spec: &KernelSpec,
    nu: &PointMassMeasure,
    lambda: f64,
    evaluation: Evaluation,
) -> Result<WeakTypeEstimate> {
    check_lambda(lambda)?;
    let level_set = match evaluation {
        Evaluation::MonteCarlo(opts) => mc_levelset(spec, nu, lambda, opts)?,
        Evaluation::PreferExact(opts) => match exact_levelset(spec, nu, lambda)? {
            Some(e) => e,
            None => mc_levelset(spec, nu, lambda, opts)?,
        },
    };
    let scale = lambda / nu.total_variation();
    Ok(WeakTypeEstimate {
        value: scale * level_set.value,
        standard_error: scale * level_set.standard_error,
        level_set,
    })
}
