//! Configuration, run orchestration and output for the command-line harness.

pub mod config;
pub mod output;
pub mod runs;

pub use config::*;
pub use output::*;
pub use runs::*;
