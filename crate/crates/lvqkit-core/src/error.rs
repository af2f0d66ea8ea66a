//! Error type shared by all core modules.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input vector or tensor does not have the expected dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A parameter violates its documented precondition.
    InvalidParameter(String),
    /// Input contains NaN or infinity where finite values are required.
    NonFinite,
    /// The channel count is not divisible by the lattice dimension.
    ChannelGrouping { channels: usize, dim: usize },
    /// Tensor shapes of two arguments do not line up.
    ShapeMismatch(String),
    /// The brute-force enumeration box is too large to search.
    SearchSpaceTooLarge { dims: usize, radius: u32 },
    /// A scalar argument is outside the function's domain.
    Domain(String),
    /// A coset flag is set on a map whose lattice has a single codebook.
    CosetFlagOnScalar,
    /// A symbol fed to the entropy coder is outside the model's alphabet.
    SymbolOutOfRange { symbol: u32, alphabet: u32 },
    /// The coded stream ended before decoding finished.
    TruncatedStream,
    /// Malformed container: bad magic, version, or section framing.
    Format(String),
    /// The stream checksum does not match its contents.
    ChecksumMismatch { stored: u32, computed: u32 },
    /// An error from a lower stage, annotated with where it happened.
    Context { what: String, inner: Box<Error> },
}

impl Error {
    /// Wrap an error with a short note about the failing step.
    pub fn context(self, what: impl Into<String>) -> Self {
        Error::Context {
            what: what.into(),
            inner: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NonFinite => write!(f, "input contains non-finite values"),
            Error::ChannelGrouping { channels, dim } => write!(
                f,
                "channel count {channels} is not divisible by lattice dimension {dim}"
            ),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::SearchSpaceTooLarge { dims, radius } => write!(
                f,
                "brute-force search space too large: {dims} dims at radius {radius}"
            ),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::CosetFlagOnScalar => {
                write!(f, "coset flag set on a single-codebook quantized map")
            }
            Error::SymbolOutOfRange { symbol, alphabet } => {
                write!(f, "symbol {symbol} outside alphabet of size {alphabet}")
            }
            Error::TruncatedStream => write!(f, "coded stream truncated"),
            Error::Format(msg) => write!(f, "stream format error: {msg}"),
            Error::ChecksumMismatch { stored, computed } => write!(
                f,
                "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
            ),
            Error::Context { what, inner } => write!(f, "{what}: {inner}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Context { inner, .. } => Some(inner),
            _ => None,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
