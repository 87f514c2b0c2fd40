use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format tag `{found}` (expected `{expected}`)")]
    FormatVersion { expected: String, found: String },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("dangling reference: {from} refers to unknown {kind} `{id}`")]
    DanglingReference {
        from: String,
        kind: &'static str,
        id: String,
    },
    #[error("model is invalid: {0} finding(s)")]
    InvalidModel(usize),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("fact `{fact}` has no impact path into the selected activities under `{target}`")]
    UnreachableFact { fact: String, target: String },
    #[error("fact `{0}` has no indicator")]
    MissingIndicator(String),
    #[error("indicator `{indicator}` is attached to `{node}`, which is not in the network")]
    DetachedIndicator { indicator: String, node: String },
    #[error("no indicator spec for node `{0}`")]
    MissingIndicatorSpec(String),
    #[error("weight for `{parent}` -> `{child}` must be positive, got {weight}")]
    NonPositiveWeight {
        parent: String,
        child: String,
        weight: f64,
    },
    #[error("invalid NPT configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid bin edges: {0}")]
    InvalidEdges(String),
    #[error("distribution has zero mass over the bin range")]
    ZeroMass,
    #[error("network contains a cycle through `{0}`")]
    Cycle(String),
    #[error("node `{node}`: {message}")]
    InvalidNode { node: String, message: String },
    #[error("node `{node}`: CPT column {column} sums to {sum}")]
    BadColumn {
        node: String,
        column: usize,
        sum: f64,
    },
    #[error("invalid evidence on `{node}`: {message}")]
    InvalidEvidence { node: String, message: String },
    #[error("impossible evidence: the observations have zero probability")]
    ImpossibleEvidence,
    #[error("node `{0}` is ranked; an interval node is required")]
    NotInterval(String),
    #[error("scenario results come from different networks")]
    NetworkMismatch,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid input data: {0}")]
    InvalidData(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Stable kebab-case identifier for error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::FormatVersion { .. } => "format-version",
            Error::DuplicateId { .. } => "duplicate-id",
            Error::DanglingReference { .. } => "dangling-reference",
            Error::InvalidModel(_) => "invalid-model",
            Error::UnknownActivity(_) => "unknown-activity",
            Error::UnknownNode(_) => "unknown-node",
            Error::UnreachableFact { .. } => "unreachable-fact",
            Error::MissingIndicator(_) => "missing-indicator",
            Error::DetachedIndicator { .. } => "detached-indicator",
            Error::MissingIndicatorSpec(_) => "missing-indicator-spec",
            Error::NonPositiveWeight { .. } => "non-positive-weight",
            Error::InvalidConfig(_) => "invalid-config",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::InvalidEdges(_) => "invalid-edges",
            Error::ZeroMass => "zero-mass",
            Error::Cycle(_) => "cycle",
            Error::InvalidNode { .. } => "invalid-node",
            Error::BadColumn { .. } => "bad-column",
            Error::InvalidEvidence { .. } => "invalid-evidence",
            Error::ImpossibleEvidence => "impossible-evidence",
            Error::NotInterval(_) => "not-interval",
            Error::NetworkMismatch => "network-mismatch",
            Error::InvalidScenario(_) => "invalid-scenario",
            Error::InvalidData(_) => "invalid-data",
            Error::Calibration(_) => "calibration",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
