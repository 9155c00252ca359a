//! Lossy optomechanical cat-state dynamics: closed-form kernels and observables,
//! a Fock-space master-equation oracle, cat-state and Wigner utilities.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cat;
pub mod cli;
pub mod compare;
pub mod error;
pub mod fock;
pub mod kernels;
pub mod observables;
pub mod quad;
pub mod wigner;

pub use error::{Error, Result};
