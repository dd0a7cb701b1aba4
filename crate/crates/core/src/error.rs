use thiserror::Error;

use crate::decomposition::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, got {got}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label {label} at position {position} is outside alphabet of size {alphabet}")]
    LabelOutOfRange {
        position: usize,
        label: u8,
        alphabet: usize,
    },

    #[error("index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("space too large to enumerate: {alphabet}^{n} assignments exceeds cap {cap}")]
    SpaceTooLarge { alphabet: usize, n: usize, cap: u64 },

    #[error("output space has no feasible assignment")]
    EmptySpace,

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("assignment is not feasible in the output space")]
    Infeasible,

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(Violation),

    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("edge ({0}, {1}) has no strict modularity; every edge must be submodular or supermodular")]
    UnclassifiedEdge(usize, usize),

    #[error("edge ({0}, {1}) is not in the graph")]
    EdgeNotFound(usize, usize),

    #[error("operation requires a binary model, got alphabet {0}")]
    NotBinary(usize),

    #[error("operation requires a pairwise network model")]
    NotPairwise,

    #[error("edge set is not a path 1-2-...-n")]
    NotAChain,

    #[error("chain decoding requires an unconstrained output space")]
    ConstrainedSpace,

    #[error("loss {0:?} does not decompose over positions")]
    LossNotDecomposable(crate::learning::LossFn),

    #[error("operation supports only the singleton-linear family")]
    UnsupportedFamily,

    #[error("sampled set pool is empty")]
    EmptySetPool,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("constraint generation failed after {0} attempts; loosen the constraint law")]
    GenerationFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
