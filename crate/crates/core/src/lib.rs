//! Continuous-variable squeezing-phase kernel toolkit.
//!
//! Gaussian-state algebra, closed-form and simulated kernel evaluation, an
//! SMO solver for the SVM dual, dataset generation and the K-fold accuracy
//! protocol, tied together by the `cvq` command-line tool.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod data;
pub mod exact;
pub mod processor;
pub mod seeding;
pub mod sources;
pub mod svm;
pub mod error;
pub mod gaussian;
pub mod kernel;
pub mod units;

pub use error::{Error, Result};
