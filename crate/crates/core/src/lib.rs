//! Nonlinear recombination dynamics and reversible quadratic systems on
//! finite product spaces.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`space`] | product spaces, subsets, distributions, product measures, densities, IPF |
//! | [`crossover`] | subset laws ν for the recombination models and their moments |
//! | [`dynamics`] | the quadratic map Ψ and the continuous-time recombination flow |
//! | [`rqs`] | pair generators, Φ\[p\], entropy production D(f,g), stationarity, linearization |
//! | [`entropy`] | Ent, relative entropy, conditional decompositions, Shannon bridge |
//! | [`inequality`] | Shearer-type bounds, κ constants, the sharp test density |
//! | [`ising`] | the nonlinear stochastic Ising systems (swap, folding, dissipative) |
//!
//! Everything works on dense vectors indexed by mixed-radix configuration
//! indices; the state spaces are meant to be enumerated exhaustively.

use thiserror::Error;

pub mod crossover;
pub mod dynamics;
pub mod eigen;
pub mod entropy;
pub mod inequality;
pub mod ising;
pub mod numeric;
pub mod rqs;
pub mod sampling;
pub mod space;

pub use crossover::CrossoverLaw;
pub use dynamics::EvolutionTrace;
pub use rqs::PairGenerator;
pub use space::{Configuration, Density, Distribution, ProductMeasure, ProductSpace, SiteSubset};

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid product space: {0}")]
    InvalidSpace(String),

    #[error("state space of size {size} exceeds the cap {cap}")]
    SpaceTooLarge { size: u128, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("objects live on different product spaces")]
    SpaceMismatch,

    #[error("invalid site subset: {0}")]
    InvalidSubset(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid crossover law: {0}")]
    InvalidLaw(String),

    #[error("exact enumeration of a {n}-site law exceeds the cap of {cap} sites; use sampling")]
    EnumerationCap { n: usize, cap: usize },

    #[error("IPF did not converge after {iterations} sweeps (max marginal deviation {deviation:e})")]
    IpfNonConvergence { iterations: usize, deviation: f64 },

    #[error("mass drift {drift:e} at t = {time} exceeds the limit; reduce the step size")]
    MassDrift { drift: f64, time: f64 },

    #[error("function must be strictly positive: {0}")]
    NonPositive(String),

    #[error("generator is not of the form G = Q - 1 with a Markov kernel Q")]
    NotKernelForm,

    #[error("reversibility violated: {0}")]
    NotReversible(String),

    #[error("distribution is not stationary: {0}")]
    NotStationary(String),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("field fit did not converge after {sweeps} sweeps (max marginal error {error:e})")]
    FieldFit { sweeps: usize, error: f64 },

    #[error("eigen solver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    EigenNonConvergence { sweeps: usize, off: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
