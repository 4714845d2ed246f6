use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid weighting factors: {0}")]
    InvalidFactors(String),

    #[error(
        "zero block row sums violated: block ({row_block},{col_block}), node {node}, row sum {sum:e}"
    )]
    RowSumViolation {
        row_block: usize,
        col_block: usize,
        node: usize,
        sum: f64,
    },

    #[error("pair (A, B) is not stabilizable: uncontrollable mode {re} {im:+}i")]
    NotStabilizable { re: f64, im: f64 },

    #[error("Riccati solve failed: {reason} (condition estimate {condition:e})")]
    RiccatiFailure { reason: String, condition: f64 },

    #[error("gain for cluster {cluster} does not stabilize A + B K (margin {margin:e})")]
    UnstableGain { cluster: usize, margin: f64 },

    #[error("Lyapunov solve requires spectrum in the open right half plane; offending eigenvalue {re} {im:+}i")]
    LyapunovSpectrum { re: f64, im: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("singular linear system in {0}")]
    Singular(String),

    #[error("cluster {cluster}: {reason}")]
    Topology { cluster: usize, reason: String },

    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(
        context: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
