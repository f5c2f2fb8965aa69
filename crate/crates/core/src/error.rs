use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad files, bad columns, malformed or infeasible inputs.
    Input,
    /// The model cannot answer the question (unstable, not convergent).
    ModelState,
    /// A numerical routine failed to certify its result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-positive price {value} for `{company}` at {date}")]
    NonPositivePrice { company: String, date: String, value: f64 },
    #[error("non-positive dividend {value} for `{company}` at {date}")]
    NonPositiveDividend { company: String, date: String, value: f64 },
    #[error("duplicate date {date}{}", company.as_ref().map(|c| format!(" for `{c}`")).unwrap_or_default())]
    DuplicateDate { date: String, company: Option<String> },
    #[error("frequency gap between {prev} and {next} ({frequency})")]
    FrequencyGap { prev: String, next: String, frequency: String },
    #[error("no observation for `{series}` at {date}")]
    MissingObservation { series: String, date: String },
    #[error("cannot parse {what} `{value}`")]
    Parse { what: String, value: String },
    #[error("non-positive gross rate {value} for `{company}` at row {row}")]
    NonPositiveGross { company: String, row: usize, value: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {rows} usable rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },
    #[error("regressor matrix is singular")]
    SingularRegressorMatrix,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("eigenvalue solver failed to converge")]
    EigenSolverFailure,
    #[error("model is not stable: max companion eigenvalue modulus {max_modulus}")]
    UnstableModel { max_modulus: f64 },
    #[error("forecast horizon must be at least 1")]
    HorizonZero,
    #[error("innovation covariance is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NonPdSigma { min_eigenvalue: f64 },

    #[error("series for company {company} is not convergent (gate value {lhs})")]
    NotConvergent { company: usize, lhs: f64 },
    #[error("tail bound not certified after {terms} terms")]
    TailBoundNotReached { terms: usize },
    #[error("context carries no prices")]
    MissingPrices,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            UnstableModel { .. } | NotConvergent { .. } | NonPdSigma { .. } => ErrorClass::ModelState,
            EigenSolverFailure | TailBoundNotReached { .. } | Numerical(_) => ErrorClass::Numerical,
            _ => ErrorClass::Input,
        }
    }
}
