//! Command-line front end: configuration, graymap and table I/O, the
//! subcommands, and the seeded verification suites.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod pgm;
pub mod verify;

pub use error::CliError;
