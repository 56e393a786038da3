//! File formats, run configuration, reports and subcommands behind the
//! `cascade` binary.

pub mod config;
pub mod io;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use run::Command;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "CASCADE_THREADS";
