//! Pooled-testing ensembles: exact ensemble probabilities from generating
//! functions, analytic rate bounds and thresholds, typical-set estimators, and
//! Monte Carlo validation.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod genfunc;
pub mod montecarlo;
pub mod numeric;
pub mod verify;

pub use error::{Error, Result};
