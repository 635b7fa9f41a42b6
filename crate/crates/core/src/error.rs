use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum SlmError {
    #[error("input not found: {}", .0.display())]
    InputNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("row {row}: expected {expected} columns, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column:?}: invalid target {value:?} ({reason})")]
    InvalidTarget {
        row: usize,
        column: String,
        value: String,
        reason: String,
    },

    #[error("unknown target column {0:?}")]
    UnknownTargetColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input value at feature {0}")]
    NonFiniteInput(usize),

    #[error("task mismatch: model is {model}, data is {data}")]
    TaskMismatch { model: String, data: String },

    #[error("degenerate split: train has {train} samples, test has {test}")]
    DegenerateSplit { train: usize, test: usize },

    #[error("node has {0} samples, at least 2 are required")]
    TooFewSamples(usize),

    #[error("projection envelope admits only zero coefficients")]
    CollapsedEnvelope,

    #[error("non-finite gradient in boosting round {round}")]
    NonFiniteGradient { round: usize },

    #[error("model format error: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SlmError>;
