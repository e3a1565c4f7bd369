use std::path::PathBuf;

use crate::gateway::GatewayError;
use crate::lang::ParseError;

/// Pipeline-level failure. `code()` is a stable machine-readable identifier.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("completion is empty once the thinking block is removed")]
    EmptyAfterStrip,
    #[error("translation mentions {count} value(s) absent from the execution: {examples}")]
    UngroundedTranslation { count: usize, examples: String },
    #[error("execution did not complete: {0}")]
    TraceNotCompleted(String),
    #[error("variant {variant} requires {field}")]
    VariantFieldMissing { variant: &'static str, field: &'static str },
    #[error("no records to emit")]
    EmptyCorpus,
    #[error("no completions to summarize")]
    EmptySample,
    #[error("verification failed for {} record(s): {}", .0.len(), .0.join(", "))]
    VerificationFailed(Vec<String>),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyQuestion => "empty_question",
            Error::EmptyAfterStrip => "empty_after_strip",
            Error::UngroundedTranslation { .. } => "ungrounded_translation",
            Error::TraceNotCompleted(_) => "trace_not_completed",
            Error::VariantFieldMissing { .. } => "variant_field_missing",
            Error::EmptyCorpus => "empty_corpus",
            Error::EmptySample => "empty_sample",
            Error::VerificationFailed(_) => "verification_failed",
            Error::Parse(_) => "parse_error",
            Error::Input(_) => "invalid_input",
            Error::Config(_) => "config_error",
            Error::Gateway(g) => g.code(),
            Error::Io { .. } => "io_error",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
