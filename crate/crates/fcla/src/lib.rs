//! Sum-rate optimization for flexible cylindrical antenna arrays.
//!
//! A base station carries `M` stacked circular layers of `N` antennas each.
//! Every antenna can revolve along its layer's circular track and every layer
//! can slide vertically, subject to minimum-spacing constraints that prevent
//! mutual coupling. This crate maximizes the multi-user MISO downlink sum
//! rate over both the precoding matrix and the antenna positions:
//!
//! * [`mod@array`] — cylindrical geometry, antenna indexing, spacing constraints.
//! * [`channel`] — multipath far-field channel synthesis from sampled
//!   user/scatterer geometry.
//! * [`fp`] — fractional-programming beamforming: auxiliary-variable updates,
//!   the quadratic surrogate, and the closed-form precoder with a bisection
//!   search on the power Lagrange multiplier.
//! * [`position`] — per-antenna objective decomposition, analytic gradients
//!   for revolving angles and layer heights, Adam ascent, and the constrained
//!   grid-search + Adam position optimizers.
//! * [`solver`] — the outer alternating loop and its per-iteration trace.
//! * [`experiment`] — Monte Carlo harness, parameter sweeps, config files,
//!   and CSV/JSON result serialization.
//!
//! The `examples/` directory contains one runnable program per capability;
//! start with `cargo run --release --example convergence_compare`. A thin
//! `fcla` binary exposes `run` and `validate` subcommands for config-driven
//! experiments.

pub mod array;
pub mod channel;
pub mod experiment;
pub mod fp;
pub mod position;
pub mod solver;

pub use array::{ArrayConfig, AntennaLayout, AntennaPosition};
pub use channel::{ChannelMatrix, PathParameters, Scenario, ScenarioParams};
pub use fp::{AuxiliaryVariables, Beamformer, SurrogateMatrices};
pub use position::{AdamHyperparams, AdamState, GridSpec, PositionOptions};
pub use solver::{IterationTrace, SolverOptions, TraceEntry, Variant};

/// Complex scalar used throughout.
pub type Complex64 = num_complex::Complex<f64>;

/// Errors surfaced by configuration and numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The array configuration admits no feasible layout.
    #[error("infeasible array configuration: {0}")]
    InfeasibleConfig(String),
    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An experiment configuration field is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
