use thiserror::Error;

/// Errors produced by the transport routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },

    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("non-finite coordinate at atom {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("total mass must be positive")]
    NonPositiveTotalMass,

    #[error("weights sum to {sum}, which is not within 1e-9 of 1")]
    WeightSumOutOfTolerance { sum: f64 },

    #[error("plan entry ({i}, {j}) out of range for a {n}x{m} plan")]
    IndexOutOfRange { i: usize, j: usize, n: usize, m: usize },

    #[error("duplicate plan entry ({i}, {j})")]
    DuplicateEntry { i: usize, j: usize },

    #[error("plan entry ({i}, {j}) has non-positive or non-finite mass {mass}")]
    NonPositiveMass { i: usize, j: usize, mass: f64 },

    #[error("direction has norm {norm}, expected 1")]
    NonUnitDirection { norm: f64 },

    #[error("total masses differ by {difference}")]
    MassImbalance { difference: f64 },

    #[error("one-dimensional plan refers to class ({a}, {b}) but there are {source_classes}x{target_classes} classes")]
    ClassMismatch {
        a: usize,
        b: usize,
        source_classes: usize,
        target_classes: usize,
    },

    #[error("instance of size {n}x{m} exceeds the exact solver limit of {limit} cells")]
    InstanceTooLarge { n: usize, m: usize, limit: usize },

    #[error("interpolation time {t} outside [0, 1]")]
    InvalidT { t: f64 },

    #[error("plan is not a coupling of the given measures: {reason}")]
    InvalidCoupling { reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
