//! Numerics for singular integral operators applied to finite sums of point masses.
//!
//! The crate is organised around the objects needed to study weak-type (1,1)
//! bounds for Riesz transforms in high dimension:
//!
//! - [`kernels`]: homogeneous Calderón–Zygmund kernels `Ω(x)/|x|^n` (Riesz,
//!   second-order Riesz, Hilbert) with closed-form gradients and sphere integrals.
//! - [`measures`]: positive point-mass measures `Σ a_k δ_{c_k}`, the transform
//!   `Tν` and the maximal truncation `T^#ν`.
//! - [`levelset`]: the measure of `{|Tν| > λ}` by exact 1D root counting,
//!   radial-angular quadrature for one mass, and Monte Carlo in general.
//! - [`decomposition`]: dyadic cubes, the dimensional Whitney decomposition and
//!   the Calderón–Zygmund split into good part, bad pieces and point masses.
//! - [`constructions`]: the cancellation integral, annulus integrals and the
//!   measure-matched exhaustion sets `E_k` with the auxiliary function `h`.
//! - [`search`]: derivative-free maximisation of `λ|{|Tν|>λ}|/‖ν‖`.
//! - [`cli`]: the batch front end used by the `riesz-lab` binary.
//!
//! All Monte Carlo estimates draw from a counter-based generator ([`rng`]), so a
//! result depends only on its inputs and seed, never on the number of threads.

pub mod cli;
pub mod constructions;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod kernels;
pub mod levelset;
pub mod measures;
pub mod rng;
pub mod search;
pub mod special;

pub use error::{Error, Result};
pub use kernels::{KernelKind, KernelSpec};
pub use levelset::{LevelSetEstimate, LevelSetMethod};
pub use measures::PointMassMeasure;
pub use rng::McOptions;
