//! Deep BSDE solver for high-dimensional semilinear parabolic PDEs.
//!
//! The crate is organised around two families of interchangeable strategies:
//! gradient networks ([`networks::Architecture`]) and PDE instances
//! ([`problems::Problem`]). Both are looked up by name in a registry so the
//! CLI and config files can select them at runtime.

pub mod autodiff;
pub mod error;
pub mod harness;
pub mod networks;
pub mod oracle;
pub mod problems;
pub mod sampler;
pub mod solver;

pub use error::{Error, Result};
