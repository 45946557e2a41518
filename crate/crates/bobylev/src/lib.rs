//! Moment characterization of probability measures through their
//! characteristic functions, and a Fourier-space solver for the spatially
//! homogeneous Boltzmann equation with Maxwellian molecules.
//!
//! The crate has two halves that share one quadrature engine:
//!
//! * **Measure side** — finitely supported probability measures
//!   ([`measures`]), their characteristic functions and the symmetric
//!   difference operators with the associated sup- and integral-type norms
//!   ([`charfun`]), and the quantitative moment bounds those norms encode
//!   ([`moments`]).
//! * **Kinetic side** — angular collision cross sections with grazing
//!   singularities ([`kernels`]), a time integrator for the Fourier-transformed
//!   collision equation in an isotropic-radial and a 3D-grid mode
//!   ([`solver`]), and checks of the conservation and continuity estimates
//!   along computed trajectories ([`diagnostics`]).
//!
//! The `bobylev` binary exposes every module through subcommands; see the
//! book under `book/` for a guided tour.

// Parameter guards are written as `!(x > 0.0)` so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfun;
pub mod config;
pub mod diagnostics;
pub mod kernels;
pub mod measures;
pub mod moments;
pub mod quad;
pub mod report;
pub mod solver;
pub mod verify;

#[cfg(doctest)]
mod book;

pub use measures::DiscreteMeasure;
pub use quad::{IntegralEstimate, QuadSpec};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be nonnegative (weight {index} is {value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("measure needs a nonempty support with positive total mass")]
    EmptySupport,
    #[error("coordinates and weights must be finite")]
    NonFiniteInput,
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    #[error("quadrature did not converge: estimated error {est_error:.3e} on value {value:.3e}")]
    QuadratureNonConvergence { value: f64, est_error: f64 },
    #[error("evaluation outside the resolved domain: |ξ| = {requested:.6e} > {limit:.6e}")]
    OutOfDomain { requested: f64, limit: f64 },
    #[error("initial datum is not isotropic: {0}")]
    NotIsotropic(String),
    #[error("stability violated: dt·Λ = {0:.3} > 0.5 (override with solver.allow_unstable)")]
    Stability(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("growth bound violated: |ψ(v)| = {value:.6e} exceeds C·⟨v⟩^p = {bound:.6e} at a support point")]
    GrowthBound { value: f64, bound: f64 },
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
