use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Model or configuration parameters outside the supported domain.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An operator that should carry squared Frobenius norm 2^L does not.
    #[error("evolution operator not normalized: |K|_F^2 = {found:.6e}, expected {expected:.6e}")]
    NotNormalized { found: f64, expected: f64 },

    /// Both outcomes of a forced measurement annihilate the current operator.
    #[error("measurement at step {step}, site {site} annihilates the evolution operator for both outcomes")]
    Annihilated { step: usize, site: usize },

    /// Mismatched dimensions, system sizes, or record shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A requested named series is absent from a trajectory record.
    #[error("missing series '{0}' in trajectory record")]
    MissingSeries(String),

    /// Not enough data points to perform a fit or average.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Data that must be strictly positive for a logarithmic fit is not.
    #[error("non-positive data: {0}")]
    NonPositiveData(String),

    /// A fit whose design or response admits no meaningful solution.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
