//! Rank-percentile impact indicators for publications and scholars.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the whole algorithmic
//! side: corpus validation and benchmark slicing, evaluation metrics, the Hazen
//! ranking engine, stability and agreement statistics, stationarity tests,
//! feature construction, the prediction harness and the synthetic corpus
//! generator. File formats, the CLI and parallel drivers live in the
//! `impact-rank` crate.
//!
//! Ages follow one convention everywhere: the publication year (or the first
//! year of a career) is age 1, so an age-`t` window covers `t` calendar years.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod features;
mod linalg;
mod math;
pub mod metrics;
pub mod percentile;
pub mod predict;
pub mod seed;
pub mod special;
pub mod stationarity;
pub mod synth;

pub use error::{Error, Result};

/// Age in years; the first observed year is age 1.
pub type Age = u32;

/// Horizon used by every age-indexed analysis.
pub const MAX_AGE: Age = 30;
