//! Derivative-free maximisers over `ℝ^d`.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::rng::{self, Purpose};

/// A new incumbent, found at the given 1-based evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub evaluation: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerRun {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// False when the budget ran out before the stopping rule fired.
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Counts evaluations and records every improvement.
struct Tracker<'a, F> {
    f: &'a mut F,
    evaluations: usize,
    best: Vec<f64>,
    value: f64,
    trace: Vec<TracePoint>,
}

impl<'a, F: FnMut(&[f64]) -> Result<f64>> Tracker<'a, F> {
    fn new(f: &'a mut F, dim: usize) -> Self {
        Self {
            f,
            evaluations: 0,
            best: vec![0.0; dim],
            value: f64::NEG_INFINITY,
            trace: Vec::new(),
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let y = (self.f)(x)?;
        self.evaluations += 1;
        if y > self.value {
            self.value = y;
            self.best = x.to_vec();
            self.trace.push(TracePoint {
                evaluation: self.evaluations,
                value: y,
            });
        }
        Ok(y)
    }

    fn finish(self, converged: bool) -> OptimizerRun {
        OptimizerRun {
            best: self.best,
            value: self.value,
            evaluations: self.evaluations,
            converged,
            trace: self.trace,
        }
    }
}

/// Nelder–Mead maximisation from `x0` with an axis-aligned initial simplex.
///
/// Stops when the simplex values agree to `ftol` (relative) and its vertices to
/// `xtol`, or after `max_evals` evaluations.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize, ftol: f64, xtol: f64) -> Result<OptimizerRun>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let d = x0.len();
    let mut t = Tracker::new(&mut f, d);
    let first = t.eval(x0)?;
    if d == 0 {
        return Ok(t.finish(true));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), first)];
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let y = t.eval(&x)?;
        simplex.push((x, y));
    }
    let at = |c: &[f64], w: &[f64], s: f64| -> Vec<f64> { c.iter().zip(w).map(|(a, b)| a + s * (b - a)).collect() };
    loop {
        // Best first; ties broken by insertion order for determinism.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (hi, lo) = (simplex[0].1, simplex[d].1);
        let spread = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if hi - lo <= ftol * hi.abs().max(1e-300) && spread <= xtol {
            return Ok(t.finish(true));
        }
        if t.evaluations >= max_evals {
            return Ok(t.finish(false));
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let xr = at(&centroid, &worst, -1.0);
        let yr = t.eval(&xr)?;
        if yr > simplex[0].1 {
            let xe = at(&centroid, &worst, -2.0);
            let ye = t.eval(&xe)?;
            simplex[d] = if ye > yr { (xe, ye) } else { (xr, yr) };
            continue;
        }
        if yr > simplex[d - 1].1 {
            simplex[d] = (xr, yr);
            continue;
        }
        let (xc, yc) = if yr > lo {
            let xc = at(&centroid, &xr, 0.5);
            let yc = t.eval(&xc)?;
            (xc, yc)
        } else {
            let xc = at(&centroid, &worst, 0.5);
            let yc = t.eval(&xc)?;
            (xc, yc)
        };
        if yc > lo.max(yr) {
            simplex[d] = (xc, yc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = at(&best, &v.0, 0.5);
            let y = t.eval(&x)?;
            *v = (x, y);
        }
    }
}

/// Simulated annealing with Gaussian proposals and a linear cooling schedule.
///
/// Proposals come from the counter-based stream `(seed, tag)`, so a run is a
/// pure function of its arguments.
pub fn simulated_annealing<F>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    initial_temperature: f64,
    seed: u64,
    tag: u64,
) -> Result<OptimizerRun>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let d = x0.len();
    let mut t = Tracker::new(&mut f, d);
    let mut x = x0.to_vec();
    let mut y = t.eval(&x)?;
    if d == 0 {
        return Ok(t.finish(true));
    }
    let steps = max_evals.saturating_sub(1);
    for k in 0..steps {
        let frac = 1.0 - k as f64 / steps as f64;
        let temperature = initial_temperature * frac;
        let width = step * (0.1 + 0.9 * frac);
        let mut g = rng::stream(seed, Purpose::Search, tag, k as u64);
        let cand: Vec<f64> = x.iter().map(|xi| xi + width * rng::standard_normal(&mut g)).collect();
        let yc = t.eval(&cand)?;
        let u: f64 = g.random();
        if yc >= y || (temperature > 0.0 && u < ((yc - y) / temperature).exp()) {
            x = cand;
            y = yc;
        }
    }
    Ok(t.finish(true))
}
