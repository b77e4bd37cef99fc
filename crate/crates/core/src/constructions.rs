//! Constructions used in the weak-type argument for point masses.
//!
//! - [`cancellation_integral`]: `∫_{|y-c|>nr} |T(b dm - a δ_c)(y)| dy` for a
//!   grid density `b` of mass `a` supported in `B(c, r)`.
//! - [`annulus_integral`]: `∫_{B(0,nr)∖B(0,r)} |K|`, which equals `‖Ω‖₁ ln n`.
//! - [`build_exhaustion`]: disjoint sets `E_k = B(c_k, r_k) ∖ ∪_{i<k} E_i` with
//!   `|E_k| = a_k/λ`, and the auxiliary function [`eval_h`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::GridFunction;
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::levelset::BallUnion;
use crate::measures::{dist2, PointMassMeasure};
use crate::rng::{self, McOptions, Purpose};
use crate::special::{sphere_area, unit_ball_volume, GaussRule};

// ---------------------------------------------------------------------------
// Cancellation integral

/// Tail tolerance relative to the integral.
const TAIL_TOLERANCE: f64 = 1e-6;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellationIntegral {
    /// `∫_{nr<|y-c|<R} |Tμ(y)| dy`.
    pub value: f64,
    /// `value / (‖Ω‖₁ ‖μ‖)` with `‖μ‖ = ∫b + a`.
    pub ratio: f64,
    /// Cutoff radius `R`.
    pub cutoff: f64,
    /// `R^n ∫_S |Tμ(c+Rθ)| dσ`, which bounds the neglected part for `|Tμ| ~ |y|^{-n-1}`.
    pub tail: f64,
    pub omega_norm: f64,
    pub mu_norm: f64,
}

/// Directions on `S^{n-1}` with quadrature weights (`n ≤ 3`).
fn sphere_rule(n: usize, depth: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let m = 16 * depth;
            let w = 2.0 * PI / m as f64;
            (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * w;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect()
        }
        3 => {
            let rule = GaussRule::new(4 * depth);
            let m = 8 * depth;
            let wp = 2.0 * PI / m as f64;
            let mut out = Vec::with_capacity(rule.order() * m);
            for (z, wz) in rule.on(-1.0, 1.0) {
                let s = (1.0 - z * z).sqrt();
                for i in 0..m {
                    let p = (i as f64 + 0.5) * wp;
                    out.push((vec![s * p.cos(), s * p.sin(), z], wz * wp));
                }
            }
            out
        }
        _ => unreachable!("checked by the caller"),
    }
}

/// `T(b dm)(y) − a K(y − c)` for `y` outside the support.
struct Potential<'a> {
    spec: &'a KernelSpec,
    /// Tensor Gauss nodes of `b` with weights `w·b(x)`.
    sources: Vec<(Vec<f64>, f64)>,
    /// Cells `(x0, x1, value)` on the line, integrated in closed form.
    intervals: Vec<(f64, f64, f64)>,
    mass: f64,
    center: Vec<f64>,
}

impl Potential<'_> {
    fn eval(&self, y: &[f64], z: &mut [f64]) -> f64 {
        let mut t = 0.0;
        if self.spec.dim() == 1 {
            let plus = self.spec.eval_unchecked(&[1.0]);
            let minus = self.spec.eval_unchecked(&[-1.0]);
            let y = y[0];
            for &(x0, x1, v) in &self.intervals {
                t += if y > x1 {
                    v * plus * ((y - x0) / (y - x1)).ln()
                } else {
                    v * minus * ((x1 - y) / (x0 - y)).ln()
                };
            }
        } else {
            for (x, w) in &self.sources {
                for ((zi, yi), xi) in z.iter_mut().zip(y).zip(x) {
                    *zi = yi - xi;
                }
                t += w * self.spec.eval_unchecked(z);
            }
        }
        for ((zi, yi), ci) in z.iter_mut().zip(y).zip(&self.center) {
            *zi = yi - ci;
        }
        t - self.mass * self.spec.eval_unchecked(z)
    }

    /// `∫_S |Tμ(c + tθ)| dσ(θ)` for each radius in `radii`.
    fn shell_means(&self, directions: &[(Vec<f64>, f64)], radii: &[f64]) -> Vec<f64> {
        let n = self.center.len();
        radii
            .par_iter()
            .map(|&t| {
                let mut y = vec![0.0; n];
                let mut z = vec![0.0; n];
                directions
                    .iter()
                    .map(|(theta, w)| {
                        for ((yi, ci), th) in y.iter_mut().zip(&self.center).zip(theta) {
                            *yi = ci + t * th;
                        }
                        w * self.eval(&y, &mut z).abs()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Tensor Gauss nodes on the box `lower + [0, side]^n`.
fn cell_nodes(rule: &GaussRule, lower: &[f64], side: f64) -> Vec<(Vec<f64>, f64)> {
    let one: Vec<(f64, f64)> = rule.on(0.0, side).collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for lo in lower {
        out = out
            .into_iter()
            .flat_map(|(x, w)| {
                one.iter().map(move |&(t, wt)| {
                    let mut x = x.clone();
                    x.push(lo + t);
                    (x, w * wt)
                })
            })
            .collect();
    }
    out
}

/// Integral of `|T(b dm − a δ_c)|` over `{|y − c| > nr}`.
///
/// `quad_depth ≥ 1` scales every quadrature order. Supported for `n ≤ 3`.
pub fn cancellation_integral(
    spec: &KernelSpec,
    b: &GridFunction,
    a: f64,
    center: &[f64],
    r: f64,
    quad_depth: usize,
) -> Result<CancellationIntegral> {
    let n = spec.dim();
    if b.dim() != n || center.len() != n {
        return Err(Error::domain("kernel, density and center dimensions differ"));
    }
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "cancellation integral is implemented for n ≤ 3, got n = {n}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if quad_depth == 0 {
        return Err(Error::domain("quad_depth must be at least 1"));
    }
    let integral = b.integral();
    if !a.is_finite() || (a - integral).abs() > 1e-10 * integral.abs().max(1.0) {
        return Err(Error::domain(format!("a = {a} differs from ∫b = {integral}")));
    }
    let side = 2f64.powi(-b.level());
    let inner = GaussRule::new(quad_depth + 1);
    let mut sources = Vec::new();
    let mut intervals = Vec::new();
    for (coords, v) in b.support() {
        let cube = b.cell_cube(&coords);
        let lower = cube.lower_corner();
        let far2: f64 = lower
            .iter()
            .zip(center)
            .map(|(lo, c)| (lo - c).abs().max((lo + side - c).abs()).powi(2))
            .sum();
        if far2 > r * r * (1.0 + 1e-12) {
            return Err(Error::domain(format!("cell {coords:?} of b leaves the ball B(c, r)")));
        }
        if n == 1 {
            intervals.push((lower[0], lower[0] + side, v));
        } else {
            sources.extend(cell_nodes(&inner, &lower, side).into_iter().map(|(x, w)| (x, w * v)));
        }
    }
    let potential = Potential {
        spec,
        sources,
        intervals,
        mass: a,
        center: center.to_vec(),
    };

    let omega_norm = spec.sphere_l1_norm().value;
    let mu_norm = integral + a;
    let directions = sphere_rule(n, quad_depth);
    let radial = GaussRule::new(2 * quad_depth + 2);
    let t0 = if n == 1 { r } else { n as f64 * r };
    // Panels graded towards t0, where the integrand may have a log singularity on the line.
    let grading = if n == 1 { 30 } else { 3 };
    let mut edges: Vec<f64> = std::iter::once(t0)
        .chain((0..grading).rev().map(|j| t0 * (1.0 + 2f64.powi(-j))))
        .collect();
    let shell = |a0: f64, a1: f64| -> f64 {
        let nodes: Vec<(f64, f64)> = radial.on(a0, a1).collect();
        let radii: Vec<f64> = nodes.iter().map(|p| p.0).collect();
        let means = potential.shell_means(&directions, &radii);
        nodes
            .iter()
            .zip(means)
            .map(|(&(t, w), m)| w * m * t.powi(n as i32 - 1))
            .sum()
    };
    let mut value: f64 = edges.windows(2).map(|e| shell(e[0], e[1])).sum();
    let mut cutoff = *edges.last().expect("nonempty");
    for _ in 0..MAX_DOUBLINGS {
        let tail = cutoff.powi(n as i32) * potential.shell_means(&directions, &[cutoff])[0];
        if tail <= TAIL_TOLERANCE * value {
            let ratio = if mu_norm > 0.0 { value / (omega_norm * mu_norm) } else { 0.0 };
            return Ok(CancellationIntegral {
                value,
                ratio,
                cutoff,
                tail,
                omega_norm,
                mu_norm,
            });
        }
        value += shell(cutoff, 2.0 * cutoff);
        cutoff *= 2.0;
        edges.push(cutoff);
    }
    Err(Error::Tolerance {
        message: format!("tail above {TAIL_TOLERANCE} relative after cutoff {cutoff}"),
        best: Some(value),
    })
}

// ---------------------------------------------------------------------------
// Annulus integral

/// `∫_{r<|y|<nr} |K(y)| dy` by Gauss quadrature in the meridian plane of an
/// axially symmetric kernel.
pub fn annulus_integral(spec: &KernelSpec, r: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let c = spec.normalization();
    let nf = n as f64;
    // |Ω| as a function of the angle φ to the symmetry axis, with its kinks.
    let (profile, kinks): (Box<dyn Fn(f64) -> f64>, Vec<f64>) = match spec.kind() {
        KernelKind::Riesz { .. } | KernelKind::Hilbert => {
            (Box::new(move |p: f64| c * p.cos().abs()), vec![PI / 2.0])
        }
        KernelKind::SecondOrderRiesz { i, j } if i == j => {
            let k = (1.0 / nf.sqrt()).acos();
            (
                Box::new(move |p: f64| c * (p.cos().powi(2) - 1.0 / nf).abs()),
                vec![k, PI - k],
            )
        }
        KernelKind::SecondOrderRiesz { .. } => {
            return Err(Error::Unsupported(
                "annulus integral needs an axially symmetric kernel".into(),
            ))
        }
    };
    let rule = GaussRule::new(order.max(2));
    let mut phi_edges = vec![0.0];
    phi_edges.extend(kinks);
    phi_edges.push(PI);
    let ring = sphere_area(n - 1);
    let mut total = 0.0;
    for e in phi_edges.windows(2) {
        for (p, wp) in rule.on(e[0], e[1]) {
            let angular = ring * profile(p) * p.sin().powi(n as i32 - 2);
            for (t, wt) in rule.on(r, nf * r) {
                // |K| = |Ω|/t^n against the volume element t^{n-1} dt dσ.
                total += wp * wt * angular / t;
            }
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Exhaustion

/// `E_k = B(c_k, r_k) ∖ ∪_{i<k} E_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionSet {
    /// 1-based.
    pub k: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub target: f64,
    /// Measured `|E_k|`; exact (zero SE) when the ball misses all earlier balls.
    pub volume: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exhaustion {
    pub dim: usize,
    pub lambda: f64,
    pub sets: Vec<ExhaustionSet>,
    #[serde(skip)]
    options: McOptions,
}

/// Independent check of `Σ|E_k| = ‖ν‖/λ` through the volume of `∪ B_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExhaustionCheck {
    pub expected: f64,
    pub sum_of_volumes: f64,
    pub union_volume: f64,
    pub union_standard_error: f64,
    /// `sqrt(Σ SE_k² + SE_union²)`.
    pub combined_standard_error: f64,
}

impl ExhaustionCheck {
    pub fn within(&self, k: f64) -> bool {
        rng::within_se(self.union_volume, self.expected, self.combined_standard_error, k)
    }
}

/// Volume of `B(c, r) ∖ ∪ balls` with common random numbers for every `r`.
fn punctured_ball_volume(
    dim: usize,
    center: &[f64],
    r: f64,
    earlier: &[(Vec<f64>, f64)],
    opts: McOptions,
    tag: u64,
) -> (f64, f64) {
    let m = rng::chunked_moments(opts.samples, |i| {
        let mut rng = rng::stream(opts.seed, Purpose::Exhaustion, tag, i);
        let mut x = vec![0.0; dim];
        rng::unit_ball_point(&mut rng, &mut x);
        for (xi, ci) in x.iter_mut().zip(center) {
            *xi = ci + r * *xi;
        }
        let inside = earlier.iter().any(|(c, rho)| dist2(&x, c) <= rho * rho);
        if inside {
            0.0
        } else {
            1.0
        }
    });
    let vol = unit_ball_volume(dim) * r.powi(dim as i32);
    (vol * m.mean(), vol * m.standard_error())
}

/// Measure-matched exhaustion of `ν` at height `λ`.
pub fn build_exhaustion(nu: &PointMassMeasure, lambda: f64, opts: McOptions) -> Result<Exhaustion> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    if opts.samples < crate::levelset::MIN_MC_SAMPLES {
        return Err(Error::domain(format!(
            "exhaustion needs at least {} samples",
            crate::levelset::MIN_MC_SAMPLES
        )));
    }
    let n = nu.dim();
    let b1 = unit_ball_volume(n);
    let mut sets: Vec<ExhaustionSet> = Vec::with_capacity(nu.len());
    let mut earlier: Vec<(Vec<f64>, f64)> = Vec::with_capacity(nu.len());
    for (idx, m) in nu.masses().iter().enumerate() {
        let target = m.mass / lambda;
        let naive = (target / b1).powf(1.0 / n as f64);
        let isolated = earlier
            .iter()
            .all(|(c, rho)| dist2(&m.center, c).sqrt() >= naive + rho);
        let (radius, volume, se) = if isolated {
            (naive, target, 0.0)
        } else {
            let tag = idx as u64 + 1;
            let earlier_volume: f64 = earlier.iter().map(|(_, rho)| b1 * rho.powi(n as i32)).sum();
            let mut lo = naive;
            let mut hi = ((target + earlier_volume) / b1).powf(1.0 / n as f64);
            let volume_at = |r: f64| punctured_ball_volume(n, &m.center, r, &earlier, opts, tag);
            // The analytic bracket holds for the true volume; widen it if
            // sampling noise puts the estimate just below the target.
            let mut widened = 0;
            while volume_at(hi).0 < target {
                widened += 1;
                if widened > 64 {
                    return Err(Error::Tolerance {
                        message: format!("bisection for r_{} is not bracketed", idx + 1),
                        best: Some(hi),
                    });
                }
                lo = hi;
                hi *= 1.1;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if volume_at(mid).0 < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // The CRN estimate jumps at hi; pick the side closer to the target.
            let (vlo, slo) = volume_at(lo);
            let (vhi, shi) = volume_at(hi);
            let (r, v, s) = if (vlo - target).abs() <= (vhi - target).abs() {
                (lo, vlo, slo)
            } else {
                (hi, vhi, shi)
            };
            if (v - target).abs() > (3.0 * s).max(1e-9 * target) {
                return Err(Error::Tolerance {
                    message: format!(
                        "|E_{}| = {v} misses a_k/λ = {target} by more than 3 SE ({s})",
                        idx + 1
                    ),
                    best: Some(r),
                });
            }
            (r, v, s)
        };
        sets.push(ExhaustionSet {
            k: idx + 1,
            center: m.center.clone(),
            radius,
            target,
            volume,
            standard_error: se,
        });
        earlier.push((m.center.clone(), radius));
    }
    Ok(Exhaustion {
        dim: n,
        lambda,
        sets,
        options: opts,
    })
}

impl Exhaustion {
    /// The `k` (1-based) with `x ∈ E_k`, if any. Since `∪_{i<k} E_i = ∪_{i<k} B_i`,
    /// this is the first ball containing `x`.
    pub fn member(&self, x: &[f64]) -> Option<usize> {
        self.sets
            .iter()
            .find(|s| dist2(x, &s.center) <= s.radius * s.radius)
            .map(|s| s.k)
    }

    /// A point of `E_k` by rejection from `B(c_k, r_k)`; `None` if `tries`
    /// draws all land in earlier sets.
    pub fn sample(&self, k: usize, rng: &mut rand_chacha::ChaCha8Rng, tries: usize) -> Option<Vec<f64>> {
        let set = &self.sets[k - 1];
        let mut x = vec![0.0; self.dim];
        for _ in 0..tries {
            rng::unit_ball_point(rng, &mut x);
            for (xi, ci) in x.iter_mut().zip(&set.center) {
                *xi = ci + set.radius * *xi;
            }
            if self.sets[..k - 1]
                .iter()
                .all(|s| dist2(&x, &s.center) > s.radius * s.radius)
            {
                assert_eq!(self.member(&x), Some(k), "E_k sample claimed by an earlier set");
                return Some(x);
            }
        }
        None
    }

    pub fn total_volume(&self) -> f64 {
        self.sets.iter().map(|s| s.volume).sum()
    }

    /// Compares `|∪ B_k|`, measured with an independent stream, to `‖ν‖/λ`.
    pub fn check(&self, nu: &PointMassMeasure) -> ExhaustionCheck {
        let union = BallUnion::from_radii(
            self.dim,
            self.sets.iter().map(|s| s.center.clone()).collect(),
            &self.sets.iter().map(|s| s.radius).collect::<Vec<_>>(),
        );
        let (union_volume, union_se) = if self.sets.len() == 1 {
            (self.sets[0].volume, 0.0)
        } else {
            union.measure(self.options, Purpose::ExhaustionCheck, 0, |_| true)
        };
        let var: f64 = self.sets.iter().map(|s| s.standard_error.powi(2)).sum::<f64>() + union_se.powi(2);
        ExhaustionCheck {
            expected: nu.total_variation() / self.lambda,
            sum_of_volumes: self.total_volume(),
            union_volume,
            union_standard_error: union_se,
            combined_standard_error: var.sqrt(),
        }
    }
}

/// Monte Carlo value of `h`, with standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HValue {
    pub value: f64,
    pub standard_error: f64,
    /// Number of `E_k` with `|x - c_k| > n r_k`.
    pub terms: usize,
}

/// `h(x) = Σ_k [|x − c_k| > n r_k] ∫_{E_k} K(x − y) dy`.
pub fn eval_h(spec: &KernelSpec, exhaustion: &Exhaustion, x: &[f64], opts: McOptions) -> Result<HValue> {
    let n = exhaustion.dim;
    if spec.dim() != n || x.len() != n {
        return Err(Error::domain("kernel, exhaustion and point dimensions differ"));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    let mut terms = 0;
    for (idx, set) in exhaustion.sets.iter().enumerate() {
        if dist2(x, &set.center).sqrt() <= n as f64 * set.radius {
            continue;
        }
        terms += 1;
        let earlier = &exhaustion.sets[..idx];
        let m = rng::chunked_moments(opts.samples, |i| {
            let mut rng = rng::stream(opts.seed, Purpose::AuxiliaryH, idx as u64, i);
            let mut y = vec![0.0; n];
            rng::unit_ball_point(&mut rng, &mut y);
            for (yi, ci) in y.iter_mut().zip(&set.center) {
                *yi = ci + set.radius * *yi;
            }
            if earlier.iter().any(|s| dist2(&y, &s.center) <= s.radius * s.radius) {
                return 0.0;
            }
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi - *yi;
            }
            spec.eval_unchecked(&y)
        });
        let vol = unit_ball_volume(n) * set.radius.powi(n as i32);
        value += vol * m.mean();
        var += (vol * m.standard_error()).powi(2);
    }
    if !value.is_finite() {
        return Err(Error::Tolerance {
            message: "non-finite value of h".into(),
            best: None,
        });
    }
    Ok(HValue {
        value,
        standard_error: var.sqrt(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    #[test]
    fn zero_density_gives_zero() {
        let spec = KernelSpec::riesz(2, 1).unwrap();
        let b = GridFunction::zeros(2, 1, vec![-1, -1], vec![2, 2]);
        let c = cancellation_integral(&spec, &b, 0.0, &[0.0, 0.0], 1.0, 2).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.ratio, 0.0);
    }

    #[test]
    fn cancellation_errors() {
        let spec = KernelSpec::hilbert();
        let b = GridFunction::new(1, 0, vec![0], vec![2], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            cancellation_integral(&spec, &b, 2.0, &[1.0], 0.5, 2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            cancellation_integral(&spec, &b, 1.0, &[1.0], 1.0, 2),
            Err(Error::Domain(_))
        ));
        assert!(cancellation_integral(&spec, &b, 2.0, &[1.0], 1.0, 2).is_ok());
        let s4 = KernelSpec::riesz(4, 1).unwrap();
        let b4 = GridFunction::zeros(4, 0, vec![0; 4], vec![1; 4]);
        assert!(matches!(
            cancellation_integral(&s4, &b4, 0.0, &[0.5; 4], 1.0, 1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn annulus_matches_log_n() {
        for n in [2usize, 3, 5] {
            let spec = KernelSpec::riesz(n, 1).unwrap();
            let v = annulus_integral(&spec, 0.7, 24).unwrap();
            let expected = FRAC_2_PI * (n as f64).ln();
            assert!((v / expected - 1.0).abs() < 1e-10, "n={n}: {v} vs {expected}");
        }
    }

    #[test]
    fn single_mass_exhaustion_is_closed_form() {
        let nu = PointMassMeasure::from_pairs(1, [(2.0, vec![0.0])]).unwrap();
        let e = build_exhaustion(&nu, 1.0, McOptions::new(1000, 1)).unwrap();
        assert!((e.sets[0].radius - 1.0).abs() < 1e-14);
        assert_eq!(e.sets[0].standard_error, 0.0);
    }

    #[test]
    fn hilbert_h_far_from_interval() {
        let nu = PointMassMeasure::from_pairs(1, [(2.0, vec![0.0])]).unwrap();
        let e = build_exhaustion(&nu, 1.0, McOptions::new(1000, 1)).unwrap();
        let h = eval_h(&KernelSpec::hilbert(), &e, &[3.0], McOptions::new(200_000, 9)).unwrap();
        let exact = 2f64.ln() / PI;
        assert!((h.value - exact).abs() < 4.0 * h.standard_error, "{h:?}");
        let inside = eval_h(&KernelSpec::hilbert(), &e, &[0.5], McOptions::new(1000, 9)).unwrap();
        assert_eq!(inside.value, 0.0);
        assert_eq!(inside.terms, 0);
    }
}
