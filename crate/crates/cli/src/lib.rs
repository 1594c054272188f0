//! File formats, run manifests and the command implementations behind the
//! `multiggm` binary. Everything is exposed as a library so the pipeline
//! can be driven in-process (the integration tests do exactly that).

pub mod commands;
pub mod errors;
pub mod formats;
pub mod manifest;
pub mod parallel;

pub use errors::{CliError, ExitCode};
