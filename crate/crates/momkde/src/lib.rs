//! Command-line tooling, file formats, and the experiment harness around
//! the `momkde-core` estimators.
//!
//! The core crate owns the numerics; this crate owns everything that
//! touches the outside world: CSV ingestion of datasets and query points,
//! JSON persistence of fitted models, the seeded experiment sweep that
//! writes plot-ready result tables, and the `momkde` binary tying those
//! together.

pub mod cli;
pub mod harness;
pub mod io;
pub mod model;

use momkde_core::CoreError;

/// Errors from ingestion, persistence, configuration, and sweeps.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric or validation failure inside the core estimators.
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A malformed input file, reported with the offending row.
    #[error("ingestion error: {0}")]
    Ingest(String),
    /// A structurally valid file that does not match the requested schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// An invalid experiment or model configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem trouble.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// CSV-level parse or write trouble.
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// JSON (de)serialization trouble.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Shorthand result type for this crate.
pub type Result<T> = std::result::Result<T, Error>;
