#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod friction;
pub mod geometry;
pub mod identifiability;
pub mod likelihood;
pub mod normal;
pub mod rng;
pub mod sampling;
pub mod stream;
pub mod varred;

pub use error::{Error, Result};
