//! File formats, reports and the command-line driver for `episae-core`.
//!
//! The core crate does the numerics; this crate reads and writes PLINK
//! filesets, parses TOML configs, renders CSV/SVG reports and runs the
//! per-variant and per-model work on a rayon pool.

pub mod cli;
pub mod config;
pub mod error;
pub mod par;
pub mod plink;
pub mod report;
pub mod svg;

pub use error::Error;
