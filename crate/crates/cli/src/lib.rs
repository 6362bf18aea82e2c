//! Library side of the `rmcf` command-line tool.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::RunConfig;
pub use error::{CliError, Result};
