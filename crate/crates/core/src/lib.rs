//! Construction and correction of word-level MT quality-estimation corpora.
//!
//! MT output is tagged OK/BAD against a pseudo-post-edit with TER alignment,
//! then optionally corrected either by perplexity-scored phrase refinement or
//! by constituent-tree span annotation. Metrics and corpus statistics live in
//! [`eval`]; [`pipeline`] drives the `qetag` command-line tool.

pub mod correct;
pub mod corpus;
pub mod eval;
pub mod ngram_lm;
pub mod phrase;
pub mod pipeline;
pub mod ter_align;
pub mod tree;
pub mod word_align;

use thiserror::Error;

/// Coarse error class, mapped to process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Internal => "internal",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Ter(#[from] ter_align::TerError),
    #[error(transparent)]
    Align(#[from] word_align::AlignError),
    #[error(transparent)]
    Lm(#[from] ngram_lm::LmError),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Correct(#[from] correct::CorrectError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Usage(_) => ErrorKind::Usage,
            Error::Correct(correct::CorrectError::Alpha(_))
            | Error::Correct(correct::CorrectError::MissingResource(..)) => ErrorKind::Usage,
            Error::Align(word_align::AlignError::NoIterations)
            | Error::Align(word_align::AlignError::Tension(_))
            | Error::Align(word_align::AlignError::NullProb(_))
            | Error::Align(word_align::AlignError::UnknownHeuristic(_)) => ErrorKind::Usage,
            Error::Lm(ngram_lm::LmError::Order(_)) | Error::Lm(ngram_lm::LmError::Discount(_)) => {
                ErrorKind::Usage
            }
            Error::Internal(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
