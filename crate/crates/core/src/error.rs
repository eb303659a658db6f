use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} channel(s), got {got}")]
    ChannelCount { expected: &'static str, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("block {bw}x{bh} does not fit in a {w}x{h} image")]
    EmptyGrid { w: usize, h: usize, bw: usize, bh: usize },

    #[error("block shape {w}x{h} is not square; quarter-turn poses need square blocks")]
    Shape { w: usize, h: usize },

    #[error("empty domain: cannot draw from a set of size 0")]
    EmptyDomain,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("key file: {0}")]
    Key(String),

    #[error("image {w}x{h} exceeds the {profile} limit of {max_w}x{max_h}")]
    Resolution { profile: String, w: usize, h: usize, max_w: usize, max_h: usize },

    #[error("jpeg decode: {0}")]
    Decode(String),

    #[error("jpeg encode: {0}")]
    Encode(String),

    #[error("puzzle grid: {0}")]
    Grid(String),

    #[error("malformed image file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short code printed by the CLI in front of every error message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ChannelCount { .. } => "E-CHANNELS",
            Error::Dimension(_) => "E-DIMENSION",
            Error::Layout(_) => "E-LAYOUT",
            Error::EmptyGrid { .. } => "E-EMPTY-GRID",
            Error::Shape { .. } => "E-SHAPE",
            Error::EmptyDomain => "E-EMPTY-DOMAIN",
            Error::Config(_) => "E-CONFIG",
            Error::Key(_) => "E-KEY",
            Error::Resolution { .. } => "E-RESOLUTION",
            Error::Decode(_) => "E-DECODE",
            Error::Encode(_) => "E-ENCODE",
            Error::Grid(_) => "E-GRID",
            Error::Format(_) => "E-FORMAT",
            Error::Io(_) => "E-IO",
            Error::Json(_) => "E-JSON",
        }
    }
}
