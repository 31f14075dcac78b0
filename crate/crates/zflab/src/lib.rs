//! Numerical laboratory for quantum integrable models with factorizing
//! scattering.
//!
//! Everything here is finite: truncated Fock spaces on rapidity grids,
//! finite operator expansions, sampled complex rapidity domains. Each module
//! exposes the objects plus checkers that return [`report::Check`] records.

pub mod analysis;
pub mod araki;
pub mod combinatorics;
pub mod config;
pub mod fock;
pub mod formfactors;
pub mod numeric;
pub mod report;
pub mod scattering;
pub mod suites;
pub mod warped;

pub use num_complex::Complex64 as C;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
