use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("operator index {index} out of range for a problem with {count} operators")]
    OperatorIndex { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operator {op} produced a non-finite value at t = {t}")]
    NonFinite { op: usize, t: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("Newton iteration failed to converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64, last: Vec<f64> },

    #[error("singular linear system (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("implicit stage for operator {op} at t = {t}: {source}")]
    Stage {
        op: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {source}")]
    LineSolve {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("node ({x}, {y}): {source}")]
    NodeSolve {
        x: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("pole of the amplification factor: implicit factor vanishes for operator {op}")]
    Pole { op: usize },

    #[error("macro interval {interval}, sweep {sweep}, node {node}: {source}")]
    Idc {
        interval: usize,
        sweep: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Strips contextual wrappers and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::LineSolve { source, .. } | Error::NodeSolve { source, .. } | Error::Idc { source, .. } => {
                source.root()
            }
            other => other,
        }
    }
}
