use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("position not covered by any segment: lane {lane_id} at s={s}")]
    NoSegment { lane_id: String, s: f64 },
    #[error("invalid geometry: gap must be positive, got {0}")]
    InvalidGeometry(f64),
    #[error("label unavailable: timeline ends at {available}s, needs {needed}s")]
    LabelUnavailable { needed: f64, available: f64 },
    #[error("degenerate landmarks: {0}")]
    DegenerateLandmarks(&'static str),
    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),
    #[error("feature history not ready at t={0}")]
    NotReady(f64),
    #[error("insufficient minority rows: need at least {needed}, have {have}")]
    InsufficientMinority { needed: usize, have: usize },
    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,
    #[error("schema mismatch: model expects {expected}, row has {found}")]
    Schema { expected: String, found: String },
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by user configuration rather than data content.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
