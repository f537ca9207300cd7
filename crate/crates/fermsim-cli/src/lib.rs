//! Library side of the `fermsim` command: the verification suites, report
//! types and schema validation, usable without spawning the binary.

pub mod cli;
pub mod error;
pub mod report;
pub mod schema;
pub mod suites;

pub use error::{CliError, Result};
