//! Numerical toolkit for the reversed Hardy-Littlewood-Sobolev inequality on ℝⁿ,
//! its extremal functions, and the associated integral system.

pub mod constants;
pub mod error;
pub mod extremal;

pub use error::{Error, Result};
pub mod profiles;
pub mod quadrature;
pub mod rearrangement;
pub mod spheres;

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
