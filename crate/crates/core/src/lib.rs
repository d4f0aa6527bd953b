//! Seed-stability laboratory.
//!
//! Trains many seeds of a small bag-of-embeddings sentiment classifier with
//! and without stochastic weight averaging, runs CheckList-style behavioral
//! suites against every model, and measures how much the seeds agree on
//! their mistakes (error rates, overlap ratios, Fleiss' kappa).

pub mod checklist;
pub mod data;
mod error;
pub mod lexicon;
pub mod rng;
pub mod stability;
pub mod swa;
pub mod textmodel;

pub use error::{Error, Result};
pub use swa::Variant;
