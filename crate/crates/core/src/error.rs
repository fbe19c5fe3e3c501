use thiserror::Error;

/// Errors produced by the transforms, the grid builder and the stretch pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window length {window} exceeds channel count {channels} (painless condition violated)")]
    PainlessViolated { window: usize, channels: usize },

    /// The diagonal frame operator vanished at `index`, so no dual window exists.
    #[error("frame not invertible: frame operator {value:.3e} at sample {index} is below tolerance")]
    FrameNotInvertible { index: usize, value: f64 },

    /// A transition region is too short for even one interpolated hop.
    #[error("degenerate transition: {frames} original frames cannot hold a hop ramp from {start} to {end}")]
    DegenerateTransition { start: usize, end: usize, frames: usize },

    #[error("reference spectrogram has zero norm on the evaluation interval")]
    UndefinedReference,

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
