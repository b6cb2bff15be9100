use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("requested {requested} basis modes but only {available} are admissible on this grid")]
    Capacity { requested: usize, available: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// Zero-energy surfaces collapse to a point; entropy and density
    /// operations on them report this instead of returning `-inf`.
    #[error("degenerate energy surface (radius 0)")]
    DegenerateSurface,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("time step {dt} rejected by CFL check; admissible dt is {admissible}")]
    StepRejected { dt: f64, admissible: f64 },

    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed data in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Capacity { .. } => "capacity",
            Error::Domain(_) => "domain",
            Error::DegenerateSurface => "degenerate-surface",
            Error::Precondition(_) => "precondition",
            Error::StepRejected { .. } => "step-rejected",
            Error::Config { .. } => "config",
            Error::Data { .. } => "data",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
