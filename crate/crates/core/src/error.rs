use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single rejected input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineProblem {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: file is not valid UTF-8", path.display())]
    NotUtf8 { path: PathBuf },

    #[error("{}: {} malformed line(s): {}", path.display(), problems.len(), join(problems))]
    Malformed { path: PathBuf, problems: Vec<LineProblem> },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("duplicate record id `{0}`")]
    DuplicateId(String),

    #[error("unknown language code `{0}`")]
    UnknownLanguage(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("translation not found in record `{record_id}`: {selector}")]
    TranslationNotFound { record_id: String, selector: String },

    #[error("unrecorded request {0}")]
    UnrecordedRequest(String),

    #[error("malformed replay fixture {}: {message}", path.display())]
    MalformedFixture { path: PathBuf, message: String },

    #[error("http status {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<Error> },

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("endpoint returned no token logprobs; it does not support echo scoring")]
    NoLogprobs,

    #[error("no scorable tokens")]
    NoScorableTokens,

    #[error("span [{start}, {end}) in record `{record_id}` exceeds translation length {len}")]
    SpanOutOfBounds {
        record_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("unknown span category `{0}`")]
    UnknownCategory(String),

    #[error("missing task metadata: {0}")]
    MissingMetadata(String),

    #[error("no fixture entry for {0}")]
    NoFixture(String),

    #[error("record `{0}` has no perplexity")]
    MissingPerplexity(String),

    #[error("record `{record_id}` lacks {what}")]
    MissingVariant { record_id: String, what: String },

    #[error("job aborted: {failed} of {total} records failed (limit {limit:.1}%)")]
    JobAborted { failed: usize, total: usize, limit: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            Error::HttpStatus { status, .. } => *status == 429 || *status >= 500,
            Error::Transport(_) => true,
            _ => false,
        }
    }
}

fn join(problems: &[LineProblem]) -> String {
    problems
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
