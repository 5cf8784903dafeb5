use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A measure, strategy or prior violates its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier { name: String, line: usize, column: usize },

    #[error("prior cannot be normalized: {0}")]
    Normalization(String),

    #[error("payoff bound violated: |u_{coordinate}| reached {observed} > declared bound {bound}")]
    BoundViolation {
        coordinate: usize,
        observed: f64,
        bound: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("conditional distribution undefined: {0}")]
    ConditionalUndefined(String),

    #[error("type error: {0}")]
    Type(String),

    /// A purification stage could not meet its allocated budget.
    #[error("stage `{stage}` infeasible: best achieved {best} against target {target}")]
    BudgetInfeasible { stage: String, best: f64, target: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
