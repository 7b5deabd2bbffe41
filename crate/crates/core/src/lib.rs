//! High-order continuous and discontinuous Galerkin solver for the viscous
//! shallow water equations with residual-based sub-grid viscosity,
//! positivity-preserving wetting and drying, and ESDIRK time stepping.

// Negated comparisons reject NaN on purpose; index loops walk variable-major data.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod basis;
pub mod cases;
pub mod driver;
pub mod error;
pub mod galerkin;
pub mod mesh;
pub mod sgs;
pub mod swe;
pub mod timeint;
pub mod wetdry;

#[cfg(test)]
mod properties;

pub use error::{Result, SweError};
