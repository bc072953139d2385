use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh must have at least one cell per side")]
    EmptyMesh,

    #[error("degenerate element {element}: signed area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("nonconforming mesh: edge ({0}, {1}) is shared by more than two elements")]
    NonConforming(usize, usize),

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular matrix: zero pivot in column {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("sigma must be positive (got {0})")]
    InvalidSigma(f64),

    #[error("theta must be -1 or 1 (got {0})")]
    InvalidTheta(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown benchmark problem '{0}' (expected one of 1, 2, 3a, 3b)")]
    UnknownProblem(String),

    #[error("function evaluated at a singular point ({0}, {1})")]
    SingularPoint(f64, f64),

    #[error("solver did not converge at level {level}: {iterations} iterations, relative residual {residual:e}")]
    SolverFailed { level: usize, iterations: usize, residual: f64 },

    #[error("matrix market parse error on line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
