use std::path::PathBuf;

use thiserror::Error;

use crate::treebank::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Training,
}

#[derive(Debug, Error)]
pub enum Error {
    /// `offset` is the 1-based character position; end of input is `len + 1`.
    #[error("bracket syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("empty sentence after stripping")]
    EmptySentence,

    #[error("tree structure error: {0}")]
    Structure(String),

    #[error("requested {requested} entries but corpus has only {available}")]
    CorpusTooSmall { requested: usize, available: usize },

    #[error("classify_node called on a {0}; only phrasal nodes can be classified")]
    NotPhrasal(&'static str),

    #[error("corpus has no countable brackets")]
    NoCountableBrackets,

    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),

    #[error("grammar file line {line}: {message}")]
    GrammarFile { line: usize, message: String },

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("span {span} out of range for sentence of length {len}")]
    SpanOutOfRange { span: Span, len: usize },

    #[error("unparseable under constraints")]
    Unparseable,

    #[error("no usable training data")]
    NoUsableData,

    #[error("no parse")]
    NoParse,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),

    #[error("generator starved after {0} consecutive rejections")]
    GeneratorStarved(usize),

    #[error("unknown nonterminal symbol `{0}`")]
    UnknownSymbol(String),

    #[error("annotation line {line}: {message}")]
    AnnotationFormat { line: usize, message: String },

    #[error("experiment spec: {0}")]
    Spec(String),

    #[error("result structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("nothing to plot")]
    EmptyResults,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotPhrasal(_) | Error::Spec(_) => ErrorKind::Usage,
            Error::Unparseable
            | Error::NoUsableData
            | Error::NoParse
            | Error::InvalidGrammar(_)
            | Error::GeneratorStarved(_) => ErrorKind::Training,
            _ => ErrorKind::Data,
        }
    }
}
