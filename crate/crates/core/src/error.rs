use std::path::PathBuf;

/// Errors produced by the library.
///
/// Every variant maps onto one of the command-line exit categories via
/// [`Error::category`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: unsupported bit depth {depth}")]
    UnsupportedBitDepth { path: PathBuf, depth: u8 },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("channel mismatch: expected {expected}, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing samples: {}", .0.join(", "))]
    MissingSamples(Vec<String>),

    #[error("{0}")]
    MissingInput(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    MissingInput,
    Internal,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::MissingInput => 3,
            Category::Internal => 4,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) => Category::Config,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                Category::MissingInput
            }
            Error::Io { .. }
            | Error::Format { .. }
            | Error::UnsupportedBitDepth { .. }
            | Error::MissingSamples(_)
            | Error::MissingInput(_) => Category::MissingInput,
            Error::DimensionMismatch { .. }
            | Error::ChannelMismatch { .. }
            | Error::InvalidRaster(_)
            | Error::Invariant(_) => Category::Internal,
        }
    }
}
