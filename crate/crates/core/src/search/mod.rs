//! Search for point-mass configurations with a large weak-type functional
//! `λ |{|Tν| > λ}| / ‖ν‖`.
//!
//! The functional is invariant under translation, rotation and joint scaling
//! of masses and `λ`, so the search runs in a fixed gauge: `λ = 1`, masses on
//! the simplex (softmax of `N - 1` free logits), `c_1 = 0` and `c_2` on the
//! positive first axis. Every evaluation uses the same Monte Carlo seed, which
//! makes the objective a deterministic function of the parameters; the final
//! incumbent is re-measured with a fresh seed and ten times the samples.

mod optimizers;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use optimizers::{nelder_mead, simulated_annealing, OptimizerRun, TracePoint};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::levelset::{weaktype_functional, Evaluation, MIN_MC_SAMPLES};
use crate::measures::{PointMass, PointMassMeasure};
use crate::rng::{self, McOptions, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    NelderMead,
    SimulatedAnnealing,
    RandomRestart,
    /// Random-restart Nelder–Mead, or simulated annealing when `N·n > 20`.
    Auto,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::NelderMead => "nelder-mead",
            OptimizerKind::SimulatedAnnealing => "simulated-annealing",
            OptimizerKind::RandomRestart => "random-restart",
            OptimizerKind::Auto => "auto",
        }
    }

    fn resolve(self, masses: usize, dim: usize) -> Self {
        match self {
            OptimizerKind::Auto if masses * dim > 20 => OptimizerKind::SimulatedAnnealing,
            OptimizerKind::Auto => OptimizerKind::RandomRestart,
            k => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchProblem {
    pub spec: KernelSpec,
    /// Number of point masses `N`.
    pub masses: usize,
    /// Samples and seed of every objective evaluation.
    pub mc: McOptions,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    /// Number of starts for the random-restart and annealing optimizers.
    pub restarts: usize,
    pub optimizer: OptimizerKind,
}

impl SearchProblem {
    pub fn new(spec: KernelSpec, masses: usize, mc: McOptions) -> Self {
        Self {
            spec,
            masses,
            mc,
            max_evals: 150,
            restarts: 4,
            optimizer: OptimizerKind::Auto,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.masses == 0 {
            return Err(Error::domain("search needs at least one mass"));
        }
        if self.max_evals == 0 || self.restarts == 0 {
            return Err(Error::domain("search budgets must be positive"));
        }
        if self.mc.samples < MIN_MC_SAMPLES {
            return Err(Error::domain(format!(
                "objective evaluations need at least {MIN_MC_SAMPLES} samples"
            )));
        }
        Ok(())
    }

    /// Number of free parameters in the gauge.
    pub fn parameter_count(&self) -> usize {
        let n = self.spec.dim();
        match self.masses {
            1 => 0,
            m => (m - 1) + 1 + (m - 2) * n,
        }
    }

    /// Configuration for a parameter vector; `λ = 1`, `‖ν‖ = 1`.
    pub fn configuration(&self, p: &[f64]) -> PointMassMeasure {
        let n = self.spec.dim();
        let m = self.masses;
        let mut logits = vec![0.0];
        logits.extend_from_slice(&p[..m - 1]);
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut centers = vec![vec![0.0; n]];
        if m >= 2 {
            let mut c2 = vec![0.0; n];
            c2[0] = p[m - 1].abs();
            centers.push(c2);
            for chunk in p[m..].chunks(n) {
                centers.push(chunk.to_vec());
            }
        }
        let masses = weights
            .iter()
            .zip(centers)
            .map(|(w, center)| PointMass {
                mass: w / total,
                center,
            })
            .collect();
        PointMassMeasure::new(n, masses).expect("gauge parameters give a valid measure")
    }

    /// Weak-type functional with the frozen seed.
    pub fn objective(&self, p: &[f64]) -> Result<(f64, f64)> {
        let nu = self.configuration(p);
        let w = weaktype_functional(&self.spec, &nu, 1.0, Evaluation::MonteCarlo(self.mc))?;
        Ok((w.value, w.standard_error))
    }

    /// Length scale of the unit-mass level set, used for steps and starts.
    fn scale(&self) -> f64 {
        self.spec.sphere_sup().max(1e-300).powf(1.0 / self.spec.dim() as f64)
    }

    /// Random start for restart `r`; restart 0 is the coincident configuration.
    fn start(&self, r: usize) -> Vec<f64> {
        let d = self.parameter_count();
        if r == 0 {
            return vec![0.0; d];
        }
        let mut g = rng::stream(self.mc.seed, Purpose::Search, u64::MAX - 1, r as u64);
        let s = self.scale();
        (0..d)
            .map(|i| {
                let z = rng::standard_normal(&mut g);
                if i < self.masses - 1 {
                    z
                } else {
                    s * z
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub optimizer: OptimizerKind,
    pub best: PointMassMeasure,
    /// Optimistic value under the frozen seed.
    pub value: f64,
    pub standard_error: f64,
    /// Value with a fresh seed and ten times the samples.
    pub reevaluated: f64,
    pub reevaluated_standard_error: f64,
    pub evaluations: usize,
    /// Value of the coincident (single-mass) configuration.
    pub baseline: f64,
    /// True when some run hit its budget before its stopping rule.
    pub incomplete: bool,
    /// Strictly increasing incumbents, numbered by global evaluation count.
    pub trace: Vec<TracePoint>,
}

fn run_one(problem: &SearchProblem, kind: OptimizerKind, restart: usize) -> Result<OptimizerRun> {
    let f = |p: &[f64]| problem.objective(p).map(|v| v.0);
    let x0 = problem.start(restart);
    let step = problem.scale();
    match kind {
        OptimizerKind::SimulatedAnnealing => simulated_annealing(
            f,
            &x0,
            0.5 * step,
            problem.max_evals,
            0.05,
            problem.mc.seed,
            restart as u64,
        ),
        _ => nelder_mead(f, &x0, step, problem.max_evals, 1e-9, 1e-6 * step),
    }
}

/// Maximises the weak-type functional over `N`-mass configurations.
pub fn optimize(problem: &SearchProblem) -> Result<SearchResult> {
    problem.validate()?;
    let kind = problem.optimizer.resolve(problem.masses, problem.spec.dim());
    let starts = match kind {
        OptimizerKind::NelderMead => 1,
        _ => problem.restarts,
    };
    let baseline = problem.objective(&vec![0.0; problem.parameter_count()])?.0;
    let runs: Vec<OptimizerRun> = (0..starts)
        .into_par_iter()
        .map(|r| run_one(problem, kind, r))
        .collect::<Result<_>>()?;

    let mut trace: Vec<TracePoint> = Vec::new();
    let mut offset = 0;
    let mut best: Option<&OptimizerRun> = None;
    for run in &runs {
        for t in &run.trace {
            if trace.last().is_none_or(|last| t.value > last.value) {
                trace.push(TracePoint {
                    evaluation: offset + t.evaluation,
                    value: t.value,
                });
            }
        }
        offset += run.evaluations;
        if best.is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one run");
    let (value, standard_error) = problem.objective(&best.best)?;
    let config = problem.configuration(&best.best);
    let fresh = McOptions::new(problem.mc.samples * 10, problem.mc.reseeded(0x5eed).seed);
    let re = weaktype_functional(&problem.spec, &config, 1.0, Evaluation::MonteCarlo(fresh))?;
    Ok(SearchResult {
        optimizer: kind,
        best: config,
        value,
        standard_error,
        reevaluated: re.value,
        reevaluated_standard_error: re.standard_error,
        evaluations: offset,
        baseline,
        incomplete: runs.iter().any(|r| !r.converged),
        trace,
    })
}

/// One cell of a dimension sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub masses: usize,
    pub best: f64,
    pub standard_error: f64,
    pub reevaluated: f64,
    pub reevaluated_standard_error: f64,
    pub evaluations: usize,
    pub incomplete: bool,
    /// Seconds; not reproducible, so kept out of default output.
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Budgets shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBudget {
    pub mc: McOptions,
    pub max_evals: usize,
    pub restarts: usize,
    pub optimizer: OptimizerKind,
}

/// Runs [`optimize`] for every `(n, N)`; `family(n)` gives the kernel in
/// dimension `n`. Failed cells are reported in their row and the sweep goes on.
///
/// Every cell uses the same seed, so coincident configurations with more
/// masses reproduce the values of fewer masses exactly.
pub fn dimension_sweep<F>(family: F, dims: &[usize], counts: &[usize], budget: SweepBudget) -> Vec<SweepRow>
where
    F: Fn(usize) -> Result<KernelSpec>,
{
    let mut rows = Vec::with_capacity(dims.len() * counts.len());
    for &n in dims {
        for &masses in counts {
            let start = Instant::now();
            let result = family(n).and_then(|spec| {
                optimize(&SearchProblem {
                    spec,
                    masses,
                    mc: budget.mc,
                    max_evals: budget.max_evals,
                    restarts: budget.restarts,
                    optimizer: budget.optimizer,
                })
            });
            let wall_time = start.elapsed().as_secs_f64();
            rows.push(match result {
                Ok(r) => SweepRow {
                    n,
                    masses,
                    best: r.value,
                    standard_error: r.standard_error,
                    reevaluated: r.reevaluated,
                    reevaluated_standard_error: r.reevaluated_standard_error,
                    evaluations: r.evaluations,
                    incomplete: r.incomplete,
                    wall_time,
                    error: None,
                },
                Err(e) => SweepRow {
                    n,
                    masses,
                    best: f64::NAN,
                    standard_error: f64::NAN,
                    reevaluated: f64::NAN,
                    reevaluated_standard_error: f64::NAN,
                    evaluations: 0,
                    incomplete: true,
                    wall_time,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_parametrisation() {
        let p = SearchProblem::new(KernelSpec::riesz(2, 1).unwrap(), 3, McOptions::new(1000, 1));
        assert_eq!(p.parameter_count(), 2 + 1 + 2);
        let nu = p.configuration(&[0.0, 2f64.ln(), -1.5, 3.0, 4.0]);
        let m = nu.masses();
        assert!((nu.total_variation() - 1.0).abs() < 1e-15);
        assert!((m[2].mass / m[0].mass - 2.0).abs() < 1e-12);
        assert_eq!(m[0].center, vec![0.0, 0.0]);
        assert_eq!(m[1].center, vec![1.5, 0.0]);
        assert_eq!(m[2].center, vec![3.0, 4.0]);
    }

    #[test]
    fn auto_switches_to_annealing() {
        assert_eq!(OptimizerKind::Auto.resolve(4, 5), OptimizerKind::RandomRestart);
        assert_eq!(OptimizerKind::Auto.resolve(3, 7), OptimizerKind::SimulatedAnnealing);
    }

    #[test]
    fn single_mass_needs_one_evaluation_per_run() {
        let mut p = SearchProblem::new(KernelSpec::riesz(3, 1).unwrap(), 1, McOptions::new(2000, 3));
        p.restarts = 2;
        let r = optimize(&p).unwrap();
        assert_eq!(r.evaluations, 2);
        assert!(!r.incomplete);
        assert_eq!(r.value, r.baseline);
    }

    #[test]
    fn rejects_empty_problem() {
        let p = SearchProblem::new(KernelSpec::hilbert(), 0, McOptions::new(2000, 3));
        assert!(matches!(optimize(&p), Err(Error::Domain(_))));
    }
}
