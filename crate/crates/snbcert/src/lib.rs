//! Host-side companion to `snbcert-core`: JSON file formats, a thread-pool
//! sampler, noise-parameter sweeps and the `snbcert` command line.

pub mod cli;
pub mod formats;
pub mod parallel;
pub mod sweep;

pub use snbcert_core as core;

/// Failures while reading, validating or writing artifacts.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot access {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("malformed JSON in {0}: {1}")]
    Json(String, #[source] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] snbcert_core::Error),
}
