//! Time-of-arrival POVM for one-dimensional tunnelling.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod config;
pub mod error;
pub mod model;
pub mod oracle;
pub mod povm;
pub mod quad;
pub mod run;
pub mod scattering;
pub mod sequential;

pub use error::{Error, Result};
