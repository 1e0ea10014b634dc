//! Exact tools for distributional Twenty Questions.
//!
//! The crate counts splitting and dividing sets of dyadic and d-adic
//! distributions, computes the relative densities that control the size of
//! optimal question sets, builds and verifies question sets, and evaluates
//! the payoff bounds behind the asymptotic base constants.

pub mod dary_bounds;
pub mod distributions;
pub mod gbeta;
pub mod hitters;
pub mod numerics;
pub mod splitting;
pub mod strategy;

mod error;
mod limits;

pub use error::{Error, Result};
pub use limits::Limits;
