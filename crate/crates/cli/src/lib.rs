//! Experiment driver, record formats and the `tomo` command line on top of
//! the core toolkit. Everything here is std-side: IO, worker pools and
//! serialization; the numerics live in `tomo-core`.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod formats;
pub mod parallel;
pub mod records;
