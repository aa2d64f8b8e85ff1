use thiserror::Error;

/// Errors raised by the discord library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid subset: {0}")]
    Subset(String),

    #[error("invalid measurement tree: {0}")]
    Tree(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("identity violated: {name} off by {violation:e}")]
    Identity { name: String, violation: f64 },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
