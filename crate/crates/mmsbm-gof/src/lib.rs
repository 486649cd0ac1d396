//! Exact conditional goodness-of-fit testing for mixed membership
//! stochastic block models (MMSBMs).
//!
//! The pipeline: fit an MMSBM to a directed binary network by collapsed
//! Gibbs sampling; for each retained posterior realization build the design
//! matrix whose margins are the sufficient statistic of the log-linear form;
//! construct a Markov basis for that matrix; run a Metropolis-Hastings walk
//! on the fiber of the observed network to get an exact conditional p-value;
//! and aggregate the per-realization p-values with a partial-conjunction
//! statistic.
//!
//! Start with the runnable examples (`cargo run --release --example
//! exact_test`), or the `mmsbm-gof` binary for file-based workflows.

pub mod cli;
pub mod design;
pub mod dyad;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod gof;
pub mod markov;
pub mod mmsbm;
pub mod netio;
pub mod numeric;
pub mod report;

pub use error::{Error, Result};
