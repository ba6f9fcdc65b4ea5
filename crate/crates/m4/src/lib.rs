//! Std companion to `m4-core`: scenario files, run records, error metrics,
//! comparison reports, weight and probe files, and the training-dataset
//! builder behind the `m4` command-line tool.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod record;
pub mod runner;
pub mod scenario;
pub mod weights_io;

pub use error::{Error, Result};
