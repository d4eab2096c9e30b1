use thiserror::Error;

/// Errors raised anywhere in the discretization and solution pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported derivative order {order} for degree {degree}")]
    UnsupportedOrder { order: usize, degree: usize },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("singular chart at ({0}, {1})")]
    SingularChart(f64, f64),

    #[error("index error: {0}")]
    Index(String),

    #[error("stabilization infeasible: small element {0:?} has no large neighbor")]
    StabilizationInfeasible((usize, usize)),

    #[error("indefinite lumped mass: dof {dof} has row sum {value:e}")]
    IndefiniteLumpedMass { dof: usize, value: f64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("time integration became unstable at step {step} (t = {t:e})")]
    Unstable { step: usize, t: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
