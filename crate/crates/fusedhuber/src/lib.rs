//! Simulation, dataset IO, column ordering, parallel tuning, experiments and
//! the command-line front end for fused-lasso penalized Huber regression.
//!
//! The numerical core (model, solver, metrics, tuning, diagnostics) lives in
//! `fusedhuber-core` and is re-exported as [`core`].

pub use fusedhuber_core as core;

pub mod cli;
pub mod config;
pub mod dataset;
pub mod experiments;
pub mod ordering;
pub mod parallel;
pub mod report;
pub mod simulate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] fusedhuber_core::Error),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Error {
        let context = context.into();
        move |source| Error::Io { context, source }
    }
}
