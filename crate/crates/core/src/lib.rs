//! Numerical toolkit for Calderón–Zygmund theory on uniform grids: kernel
//! smoothness seminorms, principal-value singular integrals, dyadic
//! decompositions and empirical weak-type bounds.

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod ext;
pub mod grid;
pub mod kernels;
pub mod operator;
pub mod verify;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
