use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}D input, got {got}D")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported group `{0}`")]
    UnsupportedGroup(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("rotation is not an element of {0}")]
    NotAGroupElement(String),

    #[error("representation is not irreducible over {0}")]
    NotIrreducible(String),

    #[error("sample set is not closed under the requested action and no Fourier fallback was given")]
    NotClosed,

    #[error("need at least {needed} samples for this band limit, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error("design matrix is ill-conditioned (condition number {cond:.3e}) on rotation set {provenance}")]
    IllConditioned { cond: f64, provenance: String },

    #[error("rotation does not permute the grid; use interpolated mode")]
    NotGridExact,

    #[error("crop size must be odd on every axis, got {0:?}")]
    EvenCrop(Vec<usize>),

    #[error("cell size mismatch: {0} vs {1}")]
    CellSizeMismatch(f64, f64),

    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("scene generation failed: {0}")]
    SceneGeneration(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
