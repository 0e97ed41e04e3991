use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No foreground pixels after binarization.
    #[error("scene contains no foreground")]
    EmptyScene,

    #[error("shape too small: {0}")]
    TooSmall(String),

    /// The contour signature is (near-)constant, e.g. a disc.
    #[error("degenerate signature: {0}")]
    Degenerate(String),

    #[error("figure projects outside the {width}x{height} frame")]
    FrameOverflow { width: usize, height: usize },

    #[error("{what}: line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable tag used in `NOSHAPE <reason>` report lines.
    pub fn reason_tag(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::EmptyScene => "empty_scene",
            Error::TooSmall(_) => "too_small",
            Error::Degenerate(_) => "degenerate",
            Error::FrameOverflow { .. } => "frame_overflow",
            Error::Parse { .. } => "parse_error",
            Error::Io(_) => "io_error",
            Error::Csv(_) => "csv_error",
        }
    }
}
