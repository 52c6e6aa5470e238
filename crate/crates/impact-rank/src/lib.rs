//! File formats, caching, run manifests and parallel drivers around
//! [`impact_rank_core`], plus the `impact-rank` command-line tool.

pub mod cache;
pub mod error;
pub mod io;
pub mod manifest;
pub mod output;
pub mod parallel;

pub use error::{Error, Result};
pub use impact_rank_core as core;
