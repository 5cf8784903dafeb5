//! Approximate purification of mixed strategies in Bayesian games with
//! compact action sets.

// `!(a < b)` deliberately rejects NaN; indexed loops follow the formulas.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod catalog;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod measures;
pub mod purify;
pub mod rng;
pub mod strategy;

pub use error::{Error, Result};
