use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in input ({0})")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {row} has norm {norm:e}, below the normalization epsilon")]
    DegenerateNorm { row: usize, norm: f64 },

    #[error("cosine {0} outside [-1, 1]")]
    InvalidCosine(f64),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("label {label} out of range for {num_classes} classes")]
    InvalidLabel { label: usize, num_classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss for sample {0}")]
    NonFiniteLoss(usize),

    #[error("infeasible dataset spec: {0}")]
    InfeasibleSpec(String),

    #[error("{negatives} negative pairs cannot resolve FAR {far:e}")]
    InsufficientNegatives { negatives: usize, far: f64 },

    #[error("no positive pairs")]
    NoPositivePairs,

    #[error("probe label {0} missing from gallery")]
    MissingGalleryIdentity(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
