//! Expectation value samplers.
//!
//! An expectation value sampler draws a classical input `x` from a simple
//! distribution, prepares `U(x)|0...0>` with a parameterized circuit and
//! returns the vector of expectation values of fixed observables. This crate
//! simulates such models, builds the two universal constructions (one qubit
//! per output with unit-norm observables, and a logarithmic register with
//! amplified basis projectors), samples them exactly or with shot noise, and
//! provides the distances and diagnostics used to evaluate them.

pub mod analysis;
pub mod error;
pub mod generators;
pub mod io;
pub mod metrics;
pub mod quantum;
pub mod reuploading;
pub mod rng;
pub mod samplers;
pub mod target_maps;

pub use error::{Error, Result};
