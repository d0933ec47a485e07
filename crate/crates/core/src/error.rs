use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("solver failure: {0}")]
    SolveFailure(String),

    #[error("solver failure on instance {index}: {source}")]
    SolveFailureAt {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),

    #[error("cost ranging requires an optimal solution (status: {0})")]
    NotOptimal(String),

    #[error("problem `{0}` has no LP form to relax")]
    NoRelaxationAvailable(String),

    #[error("exact TSP mode supports at most {max} nodes, got {nodes}")]
    ModeMismatch { nodes: usize, max: usize },

    #[error("cannot normalize a vector with norm {0:e}")]
    ZeroVector(f64),

    #[error("instance has no cached optimal decision")]
    MissingOptimalDecision,

    #[error("instance has no cached sensitivity ranges")]
    MissingRanges,

    #[error("instance has no instance-based cost")]
    MissingInstanceCost,

    #[error("instance has no baseline regret")]
    MissingBaselineRegret,

    #[error("non-finite gradient entry at output {0}")]
    NonFiniteGradient(usize),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid loss spec `{spec}`: {reason}")]
    InvalidLossSpec { spec: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid linear program: {0}")]
    InvalidLp(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_instance(self, index: usize) -> Self {
        Error::SolveFailureAt {
            index,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
