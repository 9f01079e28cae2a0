use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not square: expected {expected} entries in row {row}, found {found}")]
    MatrixShape {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix is asymmetric at ({0}, {1})")]
    Asymmetric(usize, usize),

    #[error("matrix entry at ({0}, {1}) is negative or not finite")]
    NegativeEntry(usize, usize),

    #[error("matrix diagonal entry at ({0}, {0}) is nonzero")]
    NonzeroDiagonal(usize),

    #[error("off-diagonal matrix entry at ({0}, {1}) is zero")]
    ZeroOffDiagonal(usize, usize),

    #[error("point {point} does not belong to the space: {reason}")]
    PointOutsideSpace { point: String, reason: String },

    #[error("point set must be nonempty")]
    EmptySet,

    #[error("point set contains duplicate elements at indices {0} and {1}")]
    DuplicateElement(usize, usize),

    #[error("sample needs at least two distinct points")]
    DegenerateSample,

    #[error("pair {0} consists of equal points")]
    EqualPair(usize),

    #[error("no pairs supplied")]
    NoPairs,

    #[error("map is invalid: {0}")]
    InvalidMap(String),

    #[error("x1 is not an element of T(x0)")]
    StartNotInImage,

    #[error(
        "contraction ratio violated: d(x_n, x_n+1) = {step_distance} is not below beta * N = {bound}"
    )]
    RatioViolation { step_distance: f64, bound: f64 },

    #[error("step sequence is empty")]
    EmptySteps,

    #[error("generator gave up after {attempts} rejected candidates (seed {seed})")]
    GeneratorExhausted { seed: u64, attempts: usize },

    #[error("scenario schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
