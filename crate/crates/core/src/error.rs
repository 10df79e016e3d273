use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image has zero width or height")]
    EmptyImage,

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("score stack must contain at least one class")]
    NoClasses,

    #[error("score {value} at plane {plane}, index {index} is outside [0, 1]")]
    ScoreOutOfRange { plane: usize, index: usize, value: f32 },

    #[error("region growing needs at least one seed")]
    NoSeeds,

    #[error("duplicate seed at pixel {0}")]
    DuplicateSeed(usize),

    #[error("seed confidence must be positive, got {0}")]
    NonPositiveSeedConfidence(f64),

    #[error("chi-squared argument must be non-negative, got {0}")]
    NegativeChiSquare(f64),

    #[error("at least one run estimate is required")]
    NoRuns,

    #[error("bundle size mismatch: expected {expected} bytes, found {actual}")]
    BundleSize { expected: u64, actual: u64 },

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid-config",
            Error::EmptyImage => "empty-image",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NoClasses => "no-classes",
            Error::ScoreOutOfRange { .. } => "range",
            Error::NoSeeds => "no-seeds",
            Error::DuplicateSeed(_) => "duplicate-seed",
            Error::NonPositiveSeedConfidence(_) => "seed-confidence",
            Error::NegativeChiSquare(_) => "domain",
            Error::NoRuns => "no-runs",
            Error::BundleSize { .. } => "size-mismatch",
            Error::Manifest(_) => "manifest",
            Error::DegenerateShape(_) => "degenerate-shape",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Io(_) => "io",
            Error::Image(_) => "image",
            Error::Json(_) => "json",
        }
    }

    /// Process exit status associated with [`Error::code`].
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => 2,
            Error::Io(_) => 3,
            Error::Manifest(_) | Error::Json(_) => 4,
            Error::BundleSize { .. } => 5,
            Error::ScoreOutOfRange { .. } => 6,
            Error::DimensionMismatch { .. } | Error::EmptyImage | Error::NoClasses => 7,
            Error::Image(_) => 8,
            Error::DegenerateShape(_) => 9,
            _ => 10,
        }
    }
}
