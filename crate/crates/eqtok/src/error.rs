use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty document at index {index} in {path}")]
    EmptyDocument { index: usize, path: PathBuf },

    #[error("malformed record at line {line} in {path}: {reason}")]
    MalformedRecord {
        line: usize,
        path: PathBuf,
        reason: String,
    },

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: usize },

    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),

    #[error("precision {beta} too small for alphabet of size {alphabet}")]
    PrecisionTooSmall { beta: u8, alphabet: usize },

    #[error("truncated stream: ran out of bits after {decoded} of {expected} symbols")]
    TruncatedStream { decoded: usize, expected: usize },

    #[error("window too small: symbol at offset {offset} needs {needed} bits but window is {window_bits}")]
    WindowTooSmall {
        offset: usize,
        needed: usize,
        window_bits: u32,
    },

    #[error("ambiguous window at offset {offset}: no emission satisfies the decode rule")]
    AmbiguousWindow { offset: usize },

    #[error("corrupt window {index}: no symbol count reproduces the window bits")]
    CorruptWindow { index: usize },

    #[error("misaligned stream: {bits} bits is not a multiple of {token_bits}")]
    MisalignedStream { bits: usize, token_bits: u8 },

    #[error("token {token} exceeds vocabulary of bit depth {token_bits}")]
    TokenOutOfRange { token: u32, token_bits: u8 },

    #[error("zero {0} in ratio denominator")]
    ZeroDenominator(&'static str),

    #[error("non-positive {0}")]
    NonPositive(&'static str),

    #[error("empty token sequence")]
    EmptyTokens,

    #[error("insufficient data: need at least {needed} {unit}, have {have}")]
    InsufficientData {
        needed: usize,
        have: usize,
        unit: &'static str,
    },

    #[error("bad file format in {path}: {reason}")]
    BadFormat { path: PathBuf, reason: String },

    #[error("checksum mismatch in {path}")]
    ChecksumMismatch { path: PathBuf },

    #[error("model digest mismatch: container has {container}, model has {model}")]
    DigestMismatch { container: String, model: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
