use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no active frames")]
    NoActiveFrames,

    /// A forward value or loss became NaN/Inf. The payload names the first
    /// offending tensor.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum WavError {
    #[error("malformed RIFF: {0}")]
    Malformed(String),
    #[error("unsupported format tag {0} (only PCM is accepted)")]
    NotPcm(u16),
    #[error("expected 16000 Hz, found {0} Hz (resample the file first)")]
    SampleRate(u32),
    #[error("expected mono, found {0} channels")]
    Channels(u16),
    #[error("expected 16-bit samples, found {0}-bit")]
    BitDepth(u16),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("shape mismatch for {name}: file has {found:?}, model expects {expected:?}")]
    ShapeMismatch {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("bad config blob: {0}")]
    BadConfig(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
