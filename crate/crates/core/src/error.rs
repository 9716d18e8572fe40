use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // graph validation
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) has negative or non-finite cost {2}")]
    NegativeCost(usize, usize, f64),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    IndexOutOfRange(usize, usize, usize),
    #[error("edge ({0}, {1}) is not present in the graph")]
    UnknownEdge(usize, usize),

    // matching and covers
    #[error("graph has an odd number of vertices ({0}); no perfect matching exists")]
    OddVertexCount(usize),
    #[error("graph admits no perfect matching")]
    NoPerfectMatching,
    #[error("vertex {0} has no admissible partner")]
    IsolatedVertex(usize),
    #[error("no admissible pairing of the units exists")]
    Infeasible,
    #[error("invalid subclassification: {0}")]
    InvalidSubclassification(String),

    // distances
    #[error("sample covariance is numerically singular (condition number {0:e})")]
    SingularCovariance(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("distance between units {0} and {1} is absent")]
    AbsentDistance(usize, usize),
    #[error("invalid unit table: {0}")]
    InvalidUnits(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // homogeneity
    #[error("reference unit {0} is not a member of the subclass")]
    RefNotMember(usize),
    #[error("subclass has fewer than two members")]
    SubclassTooSmall,
    #[error("brute force is limited to {max} units, got {n}")]
    TooLarge { n: usize, max: usize },

    // inference
    #[error("cluster {0:?} has no records")]
    EmptyCluster(String),
    #[error("invalid clustered study: {0}")]
    InvalidStudy(String),

    // regression
    #[error("design matrix is rank deficient")]
    RankDeficient,

    // io
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("non-finite value at row {row}, column {column:?}")]
    NonFiniteValue { row: usize, column: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors that mean the requested design cannot be built from the data,
    /// as opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::NoPerfectMatching
                | Error::IsolatedVertex(_)
                | Error::Infeasible
                | Error::OddVertexCount(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            other => Error::Parse {
                line,
                msg: format!("{other:?}"),
            },
        }
    }
}
