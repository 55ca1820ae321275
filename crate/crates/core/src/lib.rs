//! Evaluation and filtering toolkit for cross-view referring multi-object tracking.
pub mod assignment;
pub mod config;
pub mod datamodel;
pub mod fusion;
pub mod ingest;
pub mod metrics;
pub mod predictor;
pub mod synth;

pub use config::RunConfig;
