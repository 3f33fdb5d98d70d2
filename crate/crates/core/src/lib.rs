//! Conversion of OCR-produced batch manufacturing record markdown into a
//! validated, hierarchical JSON record, with quality metrics.
//!
//! The pipeline runs [`ingest`] → [`chunker`] → [`extraction`] → [`merge`] →
//! [`validation`] → [`metrics`]; [`pipeline::run_process`] wires it together
//! and [`cli`] exposes it as the `batchrec` binary.

pub mod chunker;
pub mod cli;
pub mod config;
pub mod extraction;
pub mod ingest;
pub mod merge;
pub mod metrics;
pub mod pipeline;
pub mod schema;
pub mod validation;
