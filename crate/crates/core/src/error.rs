use thiserror::Error;

/// Errors produced by mesh construction, assembly, and solves.
#[derive(Debug, Error)]
pub enum FlexoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("nonconforming interface: {0}")]
    NonconformingInterface(String),
    #[error("singular material: {0}")]
    SingularMaterial(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlexoError>;
