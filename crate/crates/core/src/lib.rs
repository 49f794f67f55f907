//! Combinatorial-probabilistic diagnostic entropy and information for
//! multi-valued diagnostic models, with greedy diagnosis-tree construction
//! and brute-force verification of the measures' identities.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod planner;

pub use error::{Error, Result};
