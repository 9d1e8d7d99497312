use thiserror::Error;

/// Errors raised while building or evaluating measure expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid interval set: {0}")]
    InvalidIntervals(String),
    #[error("density envelope violated: {0}")]
    EnvelopeViolation(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("cannot normalize a measure with total mass {0}")]
    NormalizeMass(String),
    #[error("measure has infinite mass")]
    InfiniteMass,
    #[error("transform undefined: {0}")]
    TransformUndefined(String),
    #[error("realization too large: {atoms} atoms exceeds cap {cap}")]
    RealizationTooLarge { atoms: usize, cap: usize },
    #[error("unrealizable convolution: {0}")]
    UnrealizableConvolution(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid approximate identity: {0}")]
    InvalidApproximateIdentity(String),
    #[error("invalid measure: {0}")]
    Invalid(String),
}

/// Errors raised by the bound-certificate transformers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("base measures differ between the two pairs")]
    MeasureMismatch,
    #[error("chain length {len} exceeds the configured cap {cap}")]
    ChainTooLong { len: usize, cap: usize },
}

/// Errors raised by the frame verifier.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("test function has zero norm; the frame ratio is undefined")]
    ZeroNorm,
    #[error("test function cannot be evaluated here: {0}")]
    Unevaluable(String),
    #[error("{atoms} atoms exceeds the exact-bounds cap {cap}")]
    AtomCap { atoms: usize, cap: usize },
    #[error("exact bounds need atomic measures: {0}")]
    NotAtomic(String),
    #[error("empty test family")]
    EmptyFamily,
}
