use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tree has no nodes")]
    EmptyTree,
    #[error("tree has more than one root ({0} and {1})")]
    MultipleRoots(usize, usize),
    #[error("parent links contain a cycle through node {0}")]
    Cycle(usize),
    #[error("node {node} has parent {parent}, which does not exist")]
    DanglingParent { node: usize, parent: usize },
    #[error("invalid tree description: {0}")]
    InvalidTree(String),

    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("variable `{0}` is not bound by the valuation")]
    UnboundVariable(String),
    #[error("variable `{0}` is bound twice")]
    RebindingBoundVar(String),
    #[error("node {0} is outside the domain")]
    NodeOutOfRange(usize),
    #[error("invalid closure type: {0}")]
    InvalidType(String),

    #[error("{0} variables exceed the limit of {1}")]
    TooManyVariables(usize, usize),
    #[error("type catalog exceeds {0} entries")]
    CatalogOverflow(usize),
    #[error("type is not complete: {0}")]
    NotCompleteType(String),
    #[error("cannot decompose: {0}")]
    NotDecomposable(String),

    #[error("network has a cycle through `{0}`")]
    CyclicNetwork(String),
    #[error("theta for `{rel}` uses `{sym}`, which is not a parent")]
    ThetaNotInParentSignature { rel: String, sym: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("{0} relation tuples exceed the exact-enumeration cap of {1}")]
    TooManyTuples(usize, usize),

    #[error("event is not 0/1-valued: {0}")]
    NotZeroOne(String),
    #[error("network is not closure-basic: {0}")]
    NotClosureBasic(String),

    #[error("unsupported aggregation: {0}")]
    UnsupportedAggregation(String),
    #[error("connective `{0}` is not continuous")]
    Discontinuous(String),
    #[error("conditioning formula is not positive: {0}")]
    NotPositive(String),

    #[error("bad probe parameters: {0}")]
    BadParameters(String),
    #[error("node {0} has no outgoing links")]
    DanglingNode(usize),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
