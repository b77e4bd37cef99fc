//! Batch command line front end.
//!
//! Every subcommand prints CSV (header row, 17 significant digits) or JSON to
//! stdout or `--out`. Monte Carlo subcommands require `--seed`; output depends
//! only on the arguments and input files, never on `--threads`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical tolerance failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constructions::{build_exhaustion, cancellation_integral};
use crate::decomposition::{cz_decompose, whitney_decompose, CellSet, GridFunction};
use crate::error::{Error, Result};
use crate::io::{format_f64, Csv};
use crate::kernels::{
    dimensional_constant, gradient_fd_error, lipschitz_condition_ratio, sphere_l1_norm_mc, sphere_mean_zero_check,
    KernelKind, KernelSpec,
};
use crate::levelset::{
    exact_levelset, hilbert_levelset_exact, mc_levelset, unit_level_volume, weaktype_functional, Evaluation,
    HilbertMethod,
};
use crate::measures::PointMassMeasure;
use crate::rng::McOptions;
use crate::search::{dimension_sweep, optimize, OptimizerKind, SearchProblem, SweepBudget};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "RIESZ_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "riesz-lab", version, about = "Singular integrals of point-mass measures")]
struct Cli {
    /// Worker threads (default: $RIESZ_LAB_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// A kernel family: `riesz:J`, `second-order:I,J` or `hilbert`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelArg(KernelKind);

impl FromStr for KernelArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let index = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad kernel index in {s:?}"));
        let kind = match s.split_once(':') {
            None if s == "hilbert" => KernelKind::Hilbert,
            Some(("riesz", j)) => KernelKind::Riesz { j: index(j)? },
            Some(("second-order", ij)) => {
                let (i, j) = ij
                    .split_once(',')
                    .ok_or_else(|| format!("expected second-order:I,J, got {s:?}"))?;
                KernelKind::SecondOrderRiesz {
                    i: index(i)?,
                    j: index(j)?,
                }
            }
            _ => return Err(format!("unknown kernel {s:?}; use riesz:J, second-order:I,J or hilbert")),
        };
        Ok(Self(kind))
    }
}

impl KernelArg {
    fn spec(self, n: usize) -> Result<KernelSpec> {
        KernelSpec::new(n, self.0)
    }
}

#[derive(Debug, Clone, Args)]
struct Mc {
    /// Monte Carlo samples per estimate.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Seed of the counter-based generator.
    #[arg(long)]
    seed: u64,
}

impl Mc {
    fn options(&self) -> McOptions {
        McOptions::new(self.samples, self.seed)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HilbertArg {
    Vieta,
    Bisection,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelSetArg {
    /// Exact or quadrature where available, Monte Carlo otherwise.
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Auto,
    NelderMead,
    SimulatedAnnealing,
    RandomRestart,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Auto => OptimizerKind::Auto,
            OptimizerArg::NelderMead => OptimizerKind::NelderMead,
            OptimizerArg::SimulatedAnnealing => OptimizerKind::SimulatedAnnealing,
            OptimizerArg::RandomRestart => OptimizerKind::RandomRestart,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dimensional constants and the single-mass level-set volume.
    Constants {
        /// Dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Sphere norm, mean zero, gradient and smoothness checks for one kernel.
    VerifyKernel {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long)]
        n: usize,
        /// Points for the finite-difference gradient check.
        #[arg(long, default_value_t = 1000)]
        points: u64,
        #[command(flatten)]
        mc: Mc,
    },
    /// Exact `|{|Hν| > λ}|` on the line.
    HilbertExact {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "both")]
        method: HilbertArg,
    },
    /// `|{|Tν| > λ}|`.
    Levelset {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: LevelSetArg,
        #[command(flatten)]
        mc: Mc,
    },
    /// `λ |{|Tν| > λ}| / ‖ν‖`.
    Weaktype {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Use exact solvers where available.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        mc: Mc,
    },
    /// Whitney decomposition of a cell set (JSON).
    Whitney {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        max_depth: i32,
    },
    /// Calderón–Zygmund decomposition of a grid function (JSON).
    Cz {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        max_depth: i32,
    },
    /// `∫_{|y-c|>nr} |T(b dm - a δ_c)|`.
    Cancellation {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long)]
        grid: PathBuf,
        /// Ball center, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
        /// Point mass `a` (default: the integral of the grid function).
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long, default_value_t = 4)]
        quad_depth: usize,
    },
    /// Measure-matched exhaustion sets `E_k`.
    Exhaustion {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        mc: Mc,
    },
    /// Maximise the weak-type functional over N-mass configurations.
    Search {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long)]
        n: usize,
        /// Number of masses N.
        #[arg(long = "masses")]
        masses: usize,
        #[arg(long, default_value_t = 150)]
        max_evals: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, value_enum, default_value = "auto")]
        optimizer: OptimizerArg,
        /// Write the best configuration here (measure JSON).
        #[arg(long)]
        config_out: Option<PathBuf>,
        #[command(flatten)]
        mc: Mc,
    },
    /// Run the search over a grid of dimensions and mass counts.
    Sweep {
        #[arg(long)]
        kernel: KernelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long = "masses", value_delimiter = ',', required = true)]
        masses: Vec<usize>,
        #[arg(long, default_value_t = 150)]
        max_evals: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, value_enum, default_value = "auto")]
        optimizer: OptimizerArg,
        /// Add a wall-time column (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        mc: Mc,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, text).map_err(Error::from),
                None => out.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => 0,
                Err(e) => report(err, &e),
            }
        }
        Err(e) => report(err, &e),
    }
}

fn report(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if let Error::Tolerance { best: Some(b), .. } = e {
        let _ = writeln!(err, "best value so far: {}", format_f64(*b));
    }
    e.exit_code()
}

fn threads(cli: &Cli) -> Result<Option<usize>> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Domain(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<String> {
    match threads(cli)? {
        Some(0) => Err(Error::domain("--threads must be positive")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Domain(e.to_string()))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

fn read_measure(path: &Path) -> Result<PointMassMeasure> {
    PointMassMeasure::from_json(&fs::read_to_string(path)?)
}

fn read_grid(path: &Path) -> Result<GridFunction> {
    GridFunction::from_json(&fs::read_to_string(path)?)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn f(x: f64) -> String {
    format_f64(x)
}

fn dispatch(command: &Command) -> Result<String> {
    match command {
        Command::Constants { n } => constants(n),
        Command::VerifyKernel { kernel, n, points, mc } => verify_kernel(kernel.spec(*n)?, *points, mc.options()),
        Command::HilbertExact { measure, lambda, method } => hilbert_exact(&read_measure(measure)?, *lambda, *method),
        Command::Levelset {
            kernel,
            measure,
            lambda,
            method,
            mc,
        } => {
            let nu = read_measure(measure)?;
            let spec = kernel.spec(nu.dim())?;
            let est = match method {
                LevelSetArg::Mc => mc_levelset(&spec, &nu, *lambda, mc.options())?,
                LevelSetArg::Exact => exact_levelset(&spec, &nu, *lambda)?.ok_or_else(|| {
                    Error::Unsupported("no exact solver for this kernel and measure".into())
                })?,
                LevelSetArg::Auto => match exact_levelset(&spec, &nu, *lambda)? {
                    Some(e) => e,
                    None => mc_levelset(&spec, &nu, *lambda, mc.options())?,
                },
            };
            let mut csv = Csv::new(&["method", "n", "N", "lambda", "value", "se", "samples", "seed"]);
            csv.row([
                est.method.to_string(),
                nu.dim().to_string(),
                nu.len().to_string(),
                f(*lambda),
                f(est.value),
                f(est.standard_error),
                est.samples.to_string(),
                mc.seed.to_string(),
            ]);
            Ok(csv.into_string())
        }
        Command::Weaktype {
            kernel,
            measure,
            lambda,
            exact,
            mc,
        } => {
            let nu = read_measure(measure)?;
            let spec = kernel.spec(nu.dim())?;
            let evaluation = if *exact {
                Evaluation::PreferExact(mc.options())
            } else {
                Evaluation::MonteCarlo(mc.options())
            };
            let w = weaktype_functional(&spec, &nu, *lambda, evaluation)?;
            let mut csv = Csv::new(&[
                "method", "n", "N", "lambda", "value", "se", "level_set", "level_set_se", "samples", "seed",
            ]);
            csv.row([
                w.level_set.method.to_string(),
                nu.dim().to_string(),
                nu.len().to_string(),
                f(*lambda),
                f(w.value),
                f(w.standard_error),
                f(w.level_set.value),
                f(w.level_set.standard_error),
                w.level_set.samples.to_string(),
                mc.seed.to_string(),
            ]);
            Ok(csv.into_string())
        }
        Command::Whitney { set, max_depth } => {
            let u = CellSet::from_json(&fs::read_to_string(set)?)?;
            let w = whitney_decompose(&u, *max_depth)?;
            #[derive(Serialize)]
            struct Out<'a> {
                set_measure: f64,
                cube_measure: f64,
                residual_measure: f64,
                decomposition: &'a crate::decomposition::WhitneyDecomposition,
            }
            json(&Out {
                set_measure: u.measure(),
                cube_measure: w.cube_measure(),
                residual_measure: w.residual_measure(),
                decomposition: &w,
            })
        }
        Command::Cz { grid, lambda, max_depth } => {
            let g = read_grid(grid)?;
            let cz = cz_decompose(&g, *lambda, *max_depth)?;
            let report = cz.verify(&g);
            #[derive(Serialize)]
            struct Out<'a> {
                report: &'a crate::decomposition::CzReport,
                decomposition: &'a crate::decomposition::CzDecomposition,
            }
            json(&Out {
                report: &report,
                decomposition: &cz,
            })
        }
        Command::Cancellation {
            kernel,
            grid,
            center,
            radius,
            mass,
            quad_depth,
        } => {
            let b = read_grid(grid)?;
            let spec = kernel.spec(b.dim())?;
            let a = mass.unwrap_or_else(|| b.integral());
            let c = cancellation_integral(&spec, &b, a, center, *radius, *quad_depth)?;
            let mut csv = Csv::new(&["value", "ratio", "omega_norm", "mu_norm", "cutoff", "tail"]);
            csv.row(crate::io::fields(&[c.value, c.ratio, c.omega_norm, c.mu_norm, c.cutoff, c.tail]));
            Ok(csv.into_string())
        }
        Command::Exhaustion { measure, lambda, mc } => {
            let nu = read_measure(measure)?;
            let e = build_exhaustion(&nu, *lambda, mc.options())?;
            let mut header = vec!["k".to_string()];
            header.extend((1..=nu.dim()).map(|i| format!("c{i}")));
            header.extend(["r", "volume", "se"].map(String::from));
            let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for s in &e.sets {
                let mut row = vec![s.k.to_string()];
                row.extend(crate::io::fields(&s.center));
                row.extend(crate::io::fields(&[s.radius, s.volume, s.standard_error]));
                csv.row(row);
            }
            Ok(csv.into_string())
        }
        Command::Search {
            kernel,
            n,
            masses,
            max_evals,
            restarts,
            optimizer,
            config_out,
            mc,
        } => {
            let problem = SearchProblem {
                spec: kernel.spec(*n)?,
                masses: *masses,
                mc: mc.options(),
                max_evals: *max_evals,
                restarts: *restarts,
                optimizer: (*optimizer).into(),
            };
            let r = optimize(&problem)?;
            if let Some(path) = config_out {
                fs::write(path, r.best.to_json() + "\n")?;
            }
            let mut csv = Csv::new(&[
                "optimizer",
                "n",
                "N",
                "value",
                "se",
                "reevaluated",
                "reevaluated_se",
                "baseline",
                "evals",
                "incomplete",
            ]);
            csv.row([
                r.optimizer.as_str().to_string(),
                n.to_string(),
                masses.to_string(),
                f(r.value),
                f(r.standard_error),
                f(r.reevaluated),
                f(r.reevaluated_standard_error),
                f(r.baseline),
                r.evaluations.to_string(),
                r.incomplete.to_string(),
            ]);
            Ok(csv.into_string())
        }
        Command::Sweep {
            kernel,
            dims,
            masses,
            max_evals,
            restarts,
            optimizer,
            timing,
            mc,
        } => {
            let budget = SweepBudget {
                mc: mc.options(),
                max_evals: *max_evals,
                restarts: *restarts,
                optimizer: (*optimizer).into(),
            };
            let rows = dimension_sweep(|n| kernel.spec(n), dims, masses, budget);
            let mut header = vec![
                "n",
                "N",
                "best",
                "se",
                "reevaluated",
                "reevaluated_se",
                "evals",
                "incomplete",
            ];
            if *timing {
                header.push("wall_time");
            }
            header.push("error");
            let mut csv = Csv::new(&header);
            for r in &rows {
                let mut row = vec![r.n.to_string(), r.masses.to_string()];
                row.extend(crate::io::fields(&[
                    r.best,
                    r.standard_error,
                    r.reevaluated,
                    r.reevaluated_standard_error,
                ]));
                row.push(r.evaluations.to_string());
                row.push(r.incomplete.to_string());
                if *timing {
                    row.push(f(r.wall_time));
                }
                row.push(r.error.clone().unwrap_or_default());
                csv.row(row);
            }
            Ok(csv.into_string())
        }
    }
}

fn constants(dims: &[usize]) -> Result<String> {
    let mut csv = Csv::new(&["n", "dimensional_constant", "sqrt_n_times_constant", "single_mass_level_volume"]);
    for &n in dims {
        let c = dimensional_constant(n)?;
        let v = unit_level_volume(n)?;
        csv.row([n.to_string(), f(c), f(c * (n as f64).sqrt()), f(v)]);
    }
    Ok(csv.into_string())
}

fn verify_kernel(spec: KernelSpec, points: u64, opts: McOptions) -> Result<String> {
    let n = spec.dim();
    let mut csv = Csv::new(&["check", "value", "se", "reference", "passed"]);
    let norm = spec.sphere_l1_norm();
    let est = sphere_l1_norm_mc(&spec, opts)?;
    let passed = if norm.is_upper_bound {
        est.value <= norm.value + 3.0 * est.standard_error
    } else {
        est.within(norm.value, 3.0)
    };
    csv.row([
        if norm.is_upper_bound { "sphere_l1_norm_bound" } else { "sphere_l1_norm" }.to_string(),
        f(est.value),
        f(est.standard_error),
        f(norm.value),
        passed.to_string(),
    ]);
    let mean = sphere_mean_zero_check(&spec, opts)?;
    csv.row([
        "sphere_mean".to_string(),
        f(mean.value),
        f(mean.standard_error),
        f(0.0),
        mean.within(0.0, 3.0).to_string(),
    ]);
    let grad = gradient_fd_error(&spec, points, opts.seed)?;
    csv.row([
        "gradient_fd_error".to_string(),
        f(grad),
        f(0.0),
        f(1e-6),
        (grad <= 1e-6).to_string(),
    ]);
    let bound = if spec.is_first_order() { 2.0 } else { 5f64.sqrt() * 1.1 };
    let mut worst: f64 = 0.0;
    let diagonal = vec![1.0 / (n as f64).sqrt(); n];
    let mut axis = vec![0.0; n];
    axis[0] = 1.0;
    for xi in [axis, diagonal] {
        for k in [2.0, 4.0, 8.0] {
            let delta = 1.0 / (k * n as f64);
            worst = worst.max(lipschitz_condition_ratio(&spec, &xi, delta, opts)?);
        }
    }
    csv.row([
        "lipschitz_ratio_max".to_string(),
        f(worst),
        f(0.0),
        f(bound),
        (worst <= bound).to_string(),
    ]);
    Ok(csv.into_string())
}

fn hilbert_exact(nu: &PointMassMeasure, lambda: f64, method: HilbertArg) -> Result<String> {
    let merged = nu.merged();
    let methods: &[HilbertMethod] = match method {
        HilbertArg::Vieta => &[HilbertMethod::Vieta],
        HilbertArg::Bisection => &[HilbertMethod::Bisection],
        HilbertArg::Both => &[HilbertMethod::Vieta, HilbertMethod::Bisection],
    };
    let mut csv = Csv::new(&["method", "N", "lambda", "above", "below", "total", "ratio"]);
    for &m in methods {
        let r = hilbert_levelset_exact(&merged, lambda, m)?;
        csv.row([
            r.estimate.method.to_string(),
            merged.len().to_string(),
            f(lambda),
            f(r.above),
            f(r.below),
            f(r.estimate.value),
            f(lambda * r.estimate.value / merged.total_variation()),
        ]);
    }
    Ok(csv.into_string())
}
