//! Standard-library companion to `polyel-core`: a thread-pool executor, file
//! formats, configured experiments and the `polyel` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod parallel;

pub use config::{ExperimentConfig, ExperimentKind, Format, NRule};
pub use error::{Error, Result};
pub use harness::ExperimentReport;
pub use io::{Cell, Table};
pub use parallel::Pool;

/// Crate version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
