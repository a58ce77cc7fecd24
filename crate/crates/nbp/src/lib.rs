//! File formats, reports and the command-line pipeline around `nbp-core`.

pub mod analyze;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod simulate;
pub mod validate;
