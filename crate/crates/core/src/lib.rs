//! Fused-lasso penalized adaptive Huber regression.
//!
//! Solves
//!
//! ```text
//! min_b  (1/n) sum_i h_tau(y_i - x_i^T b) + lambda1 ||b||_1 + lambda2 ||D b||_1
//! ```
//!
//! with a multi-block ADMM, where `h_tau` is the Huber loss and `D` takes first
//! differences of adjacent coefficients. The crate is `no_std` and needs only
//! `alloc`; simulation, file formats and the command-line tool live in the
//! `fusedhuber` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod float;

pub mod diagnostics;
pub mod difference;
pub mod error;
pub mod huber;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod prox;
pub mod solver;
pub mod tune;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{objective, Coefficients, LossKind, ProblemData, SolverConfig};
pub use solver::{solve, solve_least_squares, IterateState, KktResiduals, SolveResult, SolveStatus};
