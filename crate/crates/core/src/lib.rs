//! Age-structured birth-death model of ageing evolution under the Lansing
//! effect, at three scales:
//!
//! * [`demography`] — closed-form demographic analysis of a single trait:
//!   Malthusian growth rate, fitness gradient, stable age profile,
//!   equilibrium densities, invasion fitness.
//! * [`ibm`] — exact individual-based stochastic simulation of the finite
//!   population, and [`pde`] — the age-structured transport equations that
//!   arise in the large-population limit.
//! * [`tss`] — the trait substitution sequence on the rare-mutation
//!   timescale, and [`inclusion`] — its small-mutation limit, a differential
//!   inclusion whose solutions slide along the diagonal of the trait plane.
//!
//! A trait is a pair `(x_b, x_d)`: reproduction stops at age `x_b`, death
//! begins at age `x_d` (rate-one senescent mortality on top of a logistic
//! competition term). When a parent past `x_d` reproduces, the offspring
//! starts from `(x_b, 0)` — the Lansing effect.

pub mod demography;
pub mod error;
pub mod ibm;
pub mod inclusion;
pub mod kernel;
pub mod life_trait;
pub mod numeric;
pub mod pde;
pub mod tss;
pub mod verify;

pub use error::Error;
pub use life_trait::{LifeTrait, TraitRegion, DELTA_DIAGONAL};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
pub(crate) mod testutil;
