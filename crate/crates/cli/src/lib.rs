//! File formats and command implementations behind the `lockspring` binary.
//!
//! - [`config`]: INI-style toolkit configuration with line-accurate errors.
//! - [`trace_io`]: CSV work-loop traces.
//! - [`report`]: versioned JSON reports embedding the resolved config.
//! - [`plot`]: static SVG rendering of traces and efficiency summaries.
//! - [`commands`]: the five subcommands operating on those formats.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;
pub mod trace_io;
