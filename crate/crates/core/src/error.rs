use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures, grouped by the CLI exit code they map to.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad input: malformed config or mesh, out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A structural invariant of the mesh, orientation or constraints does not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),
    /// The linear solve failed.
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Invariant(_) => 3,
            Error::Solver(_) => 4,
        }
    }
}
