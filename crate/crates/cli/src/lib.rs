//! Library side of the `slm` command-line tool.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod run;
