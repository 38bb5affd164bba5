//! Error type shared by all core algorithms.

use alloc::string::String;
use core::fmt;

/// Errors produced by constructors, fitting routines, and evaluations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Mismatched dimensions or lengths between related arguments.
    Shape(String),
    /// A hyperparameter or argument outside its admissible range.
    Param(String),
    /// NaN/Inf where finite values are required, or loss of positivity.
    Numeric(String),
    /// A fit collapsed, e.g. every robust weight vanished.
    Degenerate(String),
    /// A dataset protocol cannot be satisfied, e.g. an unreachable
    /// contamination ratio.
    Protocol(String),
    /// A selection procedure found no admissible candidate.
    Selection(String),
    /// A metric precondition was violated.
    Metric(String),
    /// An estimator was asked to work with zero data points.
    EmptyModel,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Shape(msg) => write!(f, "shape error: {msg}"),
            CoreError::Param(msg) => write!(f, "parameter error: {msg}"),
            CoreError::Numeric(msg) => write!(f, "numeric error: {msg}"),
            CoreError::Degenerate(msg) => write!(f, "degenerate fit: {msg}"),
            CoreError::Protocol(msg) => write!(f, "protocol error: {msg}"),
            CoreError::Selection(msg) => write!(f, "selection error: {msg}"),
            CoreError::Metric(msg) => write!(f, "metric error: {msg}"),
            CoreError::EmptyModel => write!(f, "empty model: no data points"),
        }
    }
}

impl core::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
