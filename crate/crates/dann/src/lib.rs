//! File formats, dataset IO and the `dann` command-line tool built on
//! [`dann_core`].
//!
//! Datasets are CSV files with the label in the last column. Parameters
//! are stored in small versioned text formats (see [`formats`]) that
//! round-trip exactly.

pub mod cli;
pub mod csvio;
pub mod error;
pub mod formats;
pub mod pgm;
pub mod report;

pub use error::{CliError, Result};
