//! File formats, checkpoints, fixtures and the command implementations
//! behind the `kbsqa` binary. All algorithms live in `kbsqa-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod report;

pub use config::{Preset, RunConfig, Settings};
pub use error::{Error, Result};
