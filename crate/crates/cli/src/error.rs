use std::fmt;

use slm::SlmError;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

/// A failure with its exit status and a short machine-readable reason.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub reason: &'static str,
    pub detail: String,
}

impl CliError {
    pub fn input(reason: &'static str, detail: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, reason, detail: detail.into() }
    }

    /// Errors raised while fitting: bad parameters and data/model mismatches
    /// stay input errors, everything else is a training failure.
    pub fn training(e: SlmError) -> Self {
        let mut err = Self::from(e);
        if !matches!(err.reason, "invalid parameter" | "dimension mismatch" | "task mismatch" | "invalid dataset") {
            err.code = EXIT_TRAINING;
        }
        err
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Keep the whole message on one line.
        let detail = self.detail.replace(['\n', '\r'], " ");
        write!(f, "{}: {}", self.reason, detail)
    }
}

impl std::error::Error for CliError {}

pub fn reason_of(e: &SlmError) -> &'static str {
    match e {
        SlmError::InputNotFound(_) => "input not found",
        SlmError::Io(_) => "io error",
        SlmError::EmptyInput(_) => "empty input",
        SlmError::MalformedRow { .. } => "malformed row",
        SlmError::NonNumericCell { .. } => "non-numeric cell",
        SlmError::InvalidTarget { .. } => "invalid target",
        SlmError::UnknownTargetColumn(_) => "unknown target column",
        SlmError::InvalidDataset(_) => "invalid dataset",
        SlmError::InvalidParameter(_) => "invalid parameter",
        SlmError::DimensionMismatch { .. } => "dimension mismatch",
        SlmError::NonFiniteInput(_) => "non-finite input",
        SlmError::TaskMismatch { .. } => "task mismatch",
        SlmError::DegenerateSplit { .. } => "degenerate split",
        SlmError::TooFewSamples(_) => "too few samples",
        SlmError::CollapsedEnvelope => "collapsed envelope",
        SlmError::NonFiniteGradient { .. } => "non-finite gradient",
        SlmError::Format(_) => "bad model file",
        SlmError::Csv(_) => "csv error",
        SlmError::Json(_) => "json error",
    }
}

impl From<SlmError> for CliError {
    fn from(e: SlmError) -> Self {
        let reason = reason_of(&e);
        let text = e.to_string();
        let detail = match text.strip_prefix(reason) {
            Some(rest) => rest.trim_start_matches([':', ' ']).to_string(),
            None => text,
        };
        Self { code: EXIT_INPUT, reason, detail }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input("io error", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
