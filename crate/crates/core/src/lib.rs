//! Numerical laboratory for one-dimensional two-species interacting
//! particle systems with linear damping.
//!
//! The crate simulates sticky-particle dynamics of two coupled species
//! ([`eulerian`]), solves the equivalent dynamics of monotone quantile
//! profiles by cone projection ([`lagrangian`]), and provides the
//! optimal-transport toolkit the two descriptions share ([`transport`]).
//! [`experiments`] bundles the reproducible studies: the large-damping
//! sweep, the Newtonian large-time decay run, solver cross-validation and
//! the qualitative figure bundles.
//!
//! The `parallel` feature (default) fans the quadratic force loops and the
//! sweep entries out over rayon; disabling it yields a fully serial build
//! with bitwise-identical results.

// `!(x > 0.0)` rejects NaN together with nonpositive values; `x <= 0.0`
// would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod eulerian;
pub mod experiments;
pub mod io;
pub mod lagrangian;
pub mod parallel;
pub mod potentials;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
