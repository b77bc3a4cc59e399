use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("edge endpoint `{0}` is not a declared node")]
    DanglingEndpoint(String),
    #[error("self-loop on node `{0}` is not allowed")]
    SelfLoop(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("latent node `{0}` may not appear in a separation query")]
    LatentInQuery(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("separation statement is malformed: {0}")]
    BadStatement(String),
    #[error("statements mix separation criteria")]
    MixedCriteria,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable sets must be disjoint (shared: `{0}`)")]
    OverlappingSets(String),
    #[error("setting value {value} out of range for `{var}` (cardinality {card})")]
    SettingOutOfRange {
        var: String,
        value: usize,
        card: usize,
    },
    #[error("distribution table is not normalized in context {0}")]
    NotNormalized(String),
    #[error("negative probability in context {0}")]
    NegativeProbability(String),
    #[error("table shape mismatch: expected {expected} entries, got {got}")]
    TableShape { expected: usize, got: usize },
    #[error("operation requires binary outcomes and settings")]
    NotBinary,
    #[error("mixture weights do not form a probability distribution")]
    BadWeights,
    #[error("unknown named box `{0}`")]
    UnknownBox(String),

    #[error("malformed linear system: {0}")]
    MalformedSystem(String),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("marginals are inconsistent: {0}")]
    MarginalMismatch(String),
    #[error("input distribution is signaling: {0}")]
    SignalingInput(String),
    #[error("functionals span a degenerate plane")]
    DegeneratePlane,
    #[error("unsupported polytope/cardinality combination: {0}")]
    UnsupportedPolytope(String),

    #[error("quantum model invariant violated: {0}")]
    QuantumInvariant(String),

    #[error("epsilon must lie in (0, 1]")]
    BadEpsilon,
    #[error("setting context {0} has no runs")]
    EmptyContext(String),
    #[error("pass probability is zero; nothing to post-select")]
    ZeroPassProbability,
    #[error("amplitude table shape mismatch")]
    ShapeMismatch,

    #[error("structural equation error: {0}")]
    Equation(String),
    #[error("no solution is consistent with the conditioning")]
    EmptySupport,

    #[error("missing premise: {0}")]
    MissingPremise(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
