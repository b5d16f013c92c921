//! Everything the command-line tool needs beyond the tracker itself: file
//! formats, configuration, metrics and benchmarking.

pub mod bench;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod metrics;
pub mod record;
pub mod track;
