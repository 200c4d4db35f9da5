//! Dataset IO, experiment reports and the `plurirank` command-line harness.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod report;
pub mod singularity;
pub mod verify;

pub use cli::run;
