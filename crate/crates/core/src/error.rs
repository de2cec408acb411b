use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid tagset: {0}")]
    InvalidTagset(String),

    #[error("languages have different sentence counts: {0}")]
    MismatchedSentenceCounts(String),

    #[error("{source_name}:{line}: unknown tag symbol `{symbol}` for language `{language}`")]
    UnknownTag {
        source_name: String,
        line: usize,
        language: String,
        symbol: String,
    },

    #[error("{source_name}:{line}: empty sentence")]
    EmptySentence { source_name: String, line: usize },

    #[error("train fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),

    #[error("language `{0}` has no gold tags")]
    NoGoldTags(String),

    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    #[error("sentence {sentence}: alignment index {index} out of range for length {len}")]
    IndexOutOfRange {
        sentence: usize,
        index: u32,
        len: usize,
    },

    #[error("sentence {0}: alignment is not one-to-one")]
    NotOneToOne(usize),

    #[error("inconsistent alignment: {0}")]
    InconsistentAlignment(String),

    #[error("hyperparameter `{name}` must be strictly positive, got {value}")]
    NonPositiveHyperparameter { name: &'static str, value: f64 },

    #[error("count underflow in {0}")]
    CountUnderflow(&'static str),

    #[error("no permitted tag for token {position} of sentence {sentence}")]
    EmptySupport { sentence: usize, position: usize },

    #[error("`{language}` sentence {sentence} token {position}: tag not permitted by the lexicon")]
    ForbiddenTag {
        language: String,
        sentence: usize,
        position: usize,
    },

    #[error("log likelihood is not finite at the current value {0}")]
    NonFiniteLikelihood(f64),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveHyperparameter { name, value })
    }
}
