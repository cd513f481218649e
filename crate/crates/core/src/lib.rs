// `!(x <= tol)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod arithmetic;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod cocycle;
pub mod kam;
pub mod linalg;
pub mod selftest;

pub use error::{Error, Result};
