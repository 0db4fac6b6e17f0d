//! Numerical laboratory for transfer-operator cocycles of random expanding
//! circle maps: equivariant densities, statistical stability, quenched and
//! annealed linear response, and the variance of the quenched CLT.

// Negated float comparisons are deliberate: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod maps;
pub mod observable;
pub mod spectral;
pub mod stats;
pub mod cocycle;
pub mod equivariant;
pub mod response;
pub mod clt;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
