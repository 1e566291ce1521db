use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("kernel is not positive on the given points (squared distance {0})")]
    NotPositive(f64),

    #[error("normalization undefined: K(x, x) = {0} is not positive")]
    ZeroSelfSimilarity(f64),

    #[error("min kernel requires nonnegative scalar inputs")]
    MinKernelDomain,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {0} is isolated; the normalized Laplacian is undefined")]
    IsolatedVertex(usize),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),

    #[error("graph has {n} vertices; exhaustive search supports at most {max}, use sweep_cut instead")]
    TooLarge { n: usize, max: usize },

    #[error("edge ({0}, {1}) is already present")]
    EdgeExists(usize, usize),

    #[error("operation requires a simple unweighted graph")]
    Weighted,

    #[error("trial vector is constant; the Rayleigh quotient is undefined")]
    ConstantTrial,

    #[error("objective increased for {streak} consecutive steps at iteration {iteration}; try a smaller step size")]
    Diverged { iteration: usize, streak: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("point is {0:e} away from the manifold")]
    OffManifold(f64),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
