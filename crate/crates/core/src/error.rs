use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    // trace text
    #[error("unbalanced brackets: {0}")]
    UnbalancedBrackets(String),
    #[error("array `{array}` indexed by `{var}`, which is not an enclosing loop variable")]
    UnknownIndexVariable { array: String, var: String },
    #[error("malformed token `{token}`: {reason}")]
    MalformedToken { token: String, reason: String },

    // kernel DSL
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared variable `{name}` at {line}:{column}")]
    UndeclaredVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("loops are not perfectly nested: {0}")]
    NonNestedLoops(String),

    // flattening
    #[error("no bound given for loop variable `{0}`")]
    MissingBound(String),
    #[error("flattened trace would hold {requested} symbols, above the limit of {limit}; use extrapolation instead")]
    SizeLimitExceeded { requested: u128, limit: u64 },

    // extrapolation
    #[error("inconsistent samples: {0}")]
    InconsistentSamples(String),
    #[error("stable distance {distance} does not fit the multilinear model at {at:?} (expected {expected}, observed {observed})")]
    NonlinearResidual {
        distance: i64,
        at: Vec<u64>,
        expected: i128,
        observed: i128,
    },
    #[error("volatile block is not affine in the swept bound: {0}")]
    NonAffineDilation(String),
    #[error("empty volatile list")]
    EmptyList,
    #[error("model predicts a negative frequency {frequency} for distance {distance}")]
    NegativeFrequency { distance: i64, frequency: i128 },
    #[error("target bound {bound} for `{var}` is below the smallest sample bound 2")]
    TargetTooSmall { var: String, bound: u64 },
    #[error("loop depth {0} is not supported (1 to 3 loops)")]
    UnsupportedDepth(usize),

    // cache model
    #[error("invalid cache configuration: {0}")]
    InvalidConfig(String),
    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("malformed histogram: {0}")]
    MalformedHistogram(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnbalancedBrackets(_)
            | Error::UnknownIndexVariable { .. }
            | Error::MalformedToken { .. }
            | Error::Syntax { .. }
            | Error::UndeclaredVariable { .. }
            | Error::NonNestedLoops(_)
            | Error::MalformedHistogram(_) => 2,
            Error::MissingBound(_) | Error::SizeLimitExceeded { .. } => 3,
            Error::InconsistentSamples(_)
            | Error::NonlinearResidual { .. }
            | Error::NonAffineDilation(_)
            | Error::EmptyList
            | Error::NegativeFrequency { .. }
            | Error::TargetTooSmall { .. }
            | Error::UnsupportedDepth(_) => 4,
            Error::InvalidConfig(_) | Error::EmptyHistogram => 5,
            Error::Io { .. } => 6,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
