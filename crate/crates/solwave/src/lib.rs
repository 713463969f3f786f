//! Solitary waves of nonlocal dispersive equations.
//!
//! The library is organized around a periodic pseudospectral discretization of
//! equations of the form `u_t + (f(u))_x - (Lu)_x = 0` and their regularized
//! relatives, where `L` is a Fourier multiplier operator with symbol `m(xi)`.
//! It provides:
//!
//! * symbol definitions and validation ([`symbols`]),
//! * grids, transforms, and multiplier application ([`spectral`]),
//! * nonlinearities, invariant functionals, and their gradients ([`models`]),
//! * constrained variational solvers for solitary-wave profiles ([`solver`]),
//! * time integration and orbital-stability experiments ([`evolution`]),
//! * cutoff-commutator decay scans and a discontinuous-symbol
//!   counter-example ([`cclab`]),
//! * regularity and parameter-sweep diagnostics ([`diagnostics`]).
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Scalar`] trait; `f64` is the intended default and the concrete aliases at
//! the crate root ([`Field64`], [`SolveResult64`], ...) refer to it.

pub mod cclab;
pub mod diagnostics;
pub mod evolution;
pub mod models;
pub mod solver;
pub mod spectral;
pub mod symbols;

mod scalar;

pub use scalar::Scalar;

use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A symbol definition violates its own declared bounds or parameters.
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    /// A grid cannot be constructed (non power-of-two size, negative length, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// A model or problem description is inconsistent (exponent out of range,
    /// non-positive constraint level, ...).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    /// Solver or experiment options are unusable as given.
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    /// A geometric construction failed (cutoff radii too large for the
    /// domain, interval set construction broke down, ...).
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A post-processing scaling step could not be applied.
    #[error("scaling error: {0}")]
    Scaling(String),
    /// An iteration diverged or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// A file did not have the expected on-disk format.
    #[error("format error: {0}")]
    Format(String),
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

pub use cclab::{
    ConcentrationProfile, CounterExampleReport, CounterExampleSpec, CutoffPair, DecayClass,
    DecaySeries,
};
pub use diagnostics::{CurvePoint, CurveReport, RegularityReport, SweepParameter, TailFit};
pub use evolution::{EvolutionSpec, EvolutionTrace, StabilityOptions, StabilityReport};
pub use models::{EquationKind, ExponentStatus, FunctionalKind, Nonlinearity, PowerForm};
pub use solver::{
    InitialGuess, MultiplierSignReport, PetviashviliOptions, PetviashviliResult, ProblemKind,
    ProblemSpec, ScaleMode, ScaledSolution, SolveResult, SolverOptions, StopReason, TravelingWave,
};
pub use spectral::{Field, Grid, Spectrum};
pub use symbols::{IntervalSet, SymbolKind, SymbolSpec};

/// Double-precision aliases; these are the types the command-line driver and
/// the acceptance experiments use.
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type SymbolSpec64 = SymbolSpec<f64>;
pub type IntervalSet64 = IntervalSet<f64>;
pub type Nonlinearity64 = Nonlinearity<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type EvolutionTrace64 = EvolutionTrace<f64>;

/// Single-precision aliases. Useful for quick exploratory runs; the iteration
/// tolerances in [`SolverOptions`] must be relaxed to roughly the square root
/// of their double-precision defaults to converge in this precision.
pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
pub type Spectrum32 = Spectrum<f32>;
pub type SymbolSpec32 = SymbolSpec<f32>;
pub type Nonlinearity32 = Nonlinearity<f32>;
pub type ProblemSpec32 = ProblemSpec<f32>;
pub type SolveResult32 = SolveResult<f32>;
