#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod base;
pub mod cli;
pub mod covering;
pub mod engine;
pub mod error;
pub mod smoothing;
pub mod taylor;

pub use error::{Error, Result};
