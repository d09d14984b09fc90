use thiserror::Error;

/// Failures raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("finite-difference stencil for `{field}` leaves the domain along axis {axis} at coordinate {coord}")]
    StencilExits {
        field: String,
        axis: usize,
        coord: f64,
    },

    #[error("field `{field}` is not finite at {at:?}")]
    NonFinite { field: String, at: Vec<f64> },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("profile config: {0}")]
    Config(String),

    #[error("unknown builtin profile `{0}`")]
    UnknownBuiltin(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("expansion: {0}")]
    Expansion(String),

    #[error("no interior stationary point of H found: {0}")]
    NoPeak(String),

    #[error("H has several global maxima (hypothesis H1 violated): {0:?}")]
    MultiplePeaks(Vec<Vec<f64>>),

    #[error("Hessian of H at the peak is not negative definite (hypothesis H2 violated), eigenvalues {0:?}")]
    HypothesisH2(Vec<f64>),

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("no boundary distance available for profile `{0}`")]
    DistanceUnavailable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
