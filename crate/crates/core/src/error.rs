use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("fields live on different geometries")]
    GeometryMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid orbit specification: {0}")]
    InvalidOrbit(String),

    #[error("no admissible amplitude pair: {0}")]
    NoAmplitudeSolution(String),

    #[error("field is not a member of the rearrangement class (max deviation {deviation:e})")]
    NotInClass { deviation: f64 },

    #[error("no closed form for the class supremum: {0}")]
    NoClosedForm(String),

    #[error("numerical instability at t = {time}: {detail}")]
    Numerical { time: f64, detail: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
