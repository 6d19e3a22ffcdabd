//! Discrepancy of random matrices with many i.i.d. columns.
//!
//! Building blocks: exact and heuristic discrepancy solvers, lattice tools
//! (Hermite normal form, duals, closest vectors, covering radii), column
//! distributions with their Fourier data, spanningness bounds, an exact
//! local-limit comparator, hypercube mixing checks, and a seeded
//! experiment harness.

pub mod combinatorics;
pub mod distributions;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod lattice;
pub mod local_limit;
pub mod matrix;
pub mod mixing;
pub mod solvers;
pub mod spanningness;

pub use error::{Error, Result};
