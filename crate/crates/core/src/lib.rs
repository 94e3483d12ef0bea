//! Quadratic Ranking for oblivious bipartite matching.
//!
//! The crate certifies competitive ratios of the algorithm for step-function
//! parameters, optimizes those parameters, runs the algorithm itself, computes
//! exact hardness upper bounds, and evaluates the closed-form analytic bound.

pub mod analytic;
pub mod bound;
pub mod error;
pub mod hardness;
pub mod opt;
pub mod presets;
pub mod quad;
pub mod ranking;
pub mod report;
pub mod selftest;
pub mod stepfn;

pub use error::{Error, Result};
