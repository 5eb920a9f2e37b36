use thiserror::Error;

/// Failures raised by the numerical kernels and the certificate checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix not invertible (condition estimate {0:e})")]
    NotInvertible(f64),
    #[error("matrix not diagonalizable within tolerance (eigenbasis condition {0:e})")]
    DefectiveMatrix(f64),
    #[error("closure of generators did not stabilize ({0})")]
    ClosureFailure(String),
    #[error("intersection ambiguous: singular value {value:e} near cutoff {cutoff:e}")]
    AmbiguousIntersection { value: f64, cutoff: f64 },
    #[error("central decomposition failed after reseeding: {0}")]
    DecompositionFailure(String),
    #[error("idempotent does not define a class: {0}")]
    NotAClass(String),
    #[error("idempotents are not equivalent: {0}")]
    NotEquivalent(String),
    #[error("path step {0} too coarse for telescoping similarity")]
    PathTooCoarse(usize),
    #[error("grid too coarse: determinant phase step {step:.4} at sample {index}")]
    GridTooCoarse { index: usize, step: f64 },
    #[error("winding not quantized (residual {0:e})")]
    NotQuantized(f64),
    #[error("idempotent defect {0:e} not below 1/16")]
    DefectTooLarge(f64),
    #[error("eigenvalue {0} too close to the line Re z = 1/2")]
    SpectralAmbiguity(String),
    #[error("membership residual {residual:e} exceeds threshold {threshold:e}")]
    NotCloseEnough { residual: f64, threshold: f64 },
    #[error("rounded invertible failed certification: {0}")]
    RoundingUnstable(String),
    #[error("multiplier is not a positive contraction (spectrum [{min:e}, {max:e}])")]
    NotAContraction { min: f64, max: f64 },
    #[error("invertible is not of the form 1 + y: {0}")]
    NeedsHomotopyNormalization(String),
    #[error("boundary class has nonzero image: {0}")]
    ExactnessViolation(String),
    #[error("iota image of [p] - [q] is not zero: {0}")]
    IotaNotZero(String),
    #[error("no trivialization witness: {0}")]
    NoWitness(String),
    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(String),
    #[error("pair not uniform: ratio {ratio:.4} exceeds {limit:.4}")]
    PairNotUniform { ratio: f64, limit: f64 },
}

impl Error {
    /// Stable variant name used in reports and by the C interface.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NotInvertible(_) => "NotInvertible",
            Error::DefectiveMatrix(_) => "DefectiveMatrix",
            Error::ClosureFailure(_) => "ClosureFailure",
            Error::AmbiguousIntersection { .. } => "AmbiguousIntersection",
            Error::DecompositionFailure(_) => "DecompositionFailure",
            Error::NotAClass(_) => "NotAClass",
            Error::NotEquivalent(_) => "NotEquivalent",
            Error::PathTooCoarse(_) => "PathTooCoarse",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::NotQuantized(_) => "NotQuantized",
            Error::DefectTooLarge(_) => "DefectTooLarge",
            Error::SpectralAmbiguity(_) => "SpectralAmbiguity",
            Error::NotCloseEnough { .. } => "NotCloseEnough",
            Error::RoundingUnstable(_) => "RoundingUnstable",
            Error::NotAContraction { .. } => "NotAContraction",
            Error::NeedsHomotopyNormalization(_) => "NeedsHomotopyNormalization",
            Error::ExactnessViolation(_) => "ExactnessViolation",
            Error::IotaNotZero(_) => "IotaNotZero",
            Error::NoWitness(_) => "NoWitness",
            Error::ReconstructionFailed(_) => "ReconstructionFailed",
            Error::PairNotUniform { .. } => "PairNotUniform",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
