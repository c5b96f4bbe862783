//! Library half of the memcross command-line tool: spec-file and snapshot
//! formats, CSV emitters, and the subcommand implementations. The binary in
//! `main.rs` is a thin clap dispatcher over [`commands`].

pub mod commands;
pub mod error;
pub mod output;
pub mod snapshot;
pub mod spec_file;
