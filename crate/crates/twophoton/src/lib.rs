//! Classical N-dimensional Hamiltonian systems with two-photon (h6) coalgebra
//! symmetry.
//!
//! The crate constructs Hamiltonians as functions of the six h6 generators
//! realized on N canonical pairs, produces their universal integrals of motion
//! (left/right coproducts of the cubic Casimir), the subalgebra and generator
//! integrability families, and verifies the whole structure numerically:
//! bracket-table conformance, involution, functional independence ranks, and
//! conservation drift along integrated trajectories.

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod expr;
pub mod families;
pub mod integrals;
pub mod poisson;
pub mod realization;
pub mod sample;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// configuration/validation problems exit 2, runtime singularities and
/// blow-ups exit 3, verification failures exit 1 (not an `Error`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
    #[error("symbol `{symbol}` not admissible in family {family}")]
    InadmissibleSymbol { symbol: String, family: String },
    #[error("dimension mismatch: |q| = {q}, |p| = {p}, |lambda| = {lambda}")]
    DimensionMismatch { q: usize, p: usize, lambda: usize },
    #[error("invalid site range [{a}, {b}] for N = {n}")]
    BadSiteRange { a: usize, b: usize, n: usize },
    #[error("integral order m = {m} out of range for N = {n}")]
    BadIntegralOrder { m: usize, n: usize },
    #[error("realization parameters must satisfy sum(lambda_i^2) > 0")]
    DegenerateRealization,
    #[error("unknown subalgebra `{0}`")]
    UnknownSubalgebra(String),
    #[error("subalgebra E requires nonzero mu and nu")]
    InvalidEParameters,
    #[error("near-singular denominator in {what}: |{denominator}| = {value:.3e}")]
    Singularity {
        what: String,
        denominator: String,
        value: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use algebra::{GeneratorId, H6Point, SubalgebraName};
pub use expr::{Expr, SymbolContext};
pub use families::{BuiltSystem, HamiltonianSpec};
pub use poisson::Observable;
pub use realization::{PhaseState, RealizationParams};
