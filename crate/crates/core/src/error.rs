use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed parameters, violated preconditions.
    Validation,
    /// The numerics could not reach the requested accuracy.
    Numerical,
    /// The request is physically impossible (e.g. a band gap).
    Physical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("envelope is not normalized: norm^2 = {norm_sqr}")]
    Unnormalized { norm_sqr: f64 },

    #[error("negative probability mass {mass} in bin {index}")]
    NegativeMass { index: usize, mass: f64 },

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("basis is not orthogonal: |<phi1|phi2>| = {overlap}")]
    NonOrthogonalBasis { overlap: f64 },

    #[error("{quantity} disagrees between routes: {first} vs {second}")]
    ResolutionFailure {
        quantity: &'static str,
        first: f64,
        second: f64,
    },

    #[error("ODE step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error(
        "target carries too much norm before detection: denominator {denominator:e} at t = {t}"
    )]
    DenominatorFloor { t: f64, denominator: f64 },

    #[error("spectrum is under-resolved: tail mass {tail_mass:e} exceeds {tolerance:e}")]
    UnderResolvedSpectrum { tail_mass: f64, tolerance: f64 },

    #[error("truncation at n_max = {n_max} did not converge (tail bound {bound:e}, partial sum {partial:e})")]
    TruncationNotConverged {
        n_max: usize,
        bound: f64,
        partial: f64,
    },

    #[error("filter transmits nothing of the trigger spectrum")]
    ZeroTransmission,

    #[error(
        "photonic band gap: transmission vanishes at omega = {omega} inside the target support"
    )]
    BandGap { omega: f64 },

    #[error("no clicks on the reference detector; ratio estimate undefined")]
    NoReferenceClicks,

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ResolutionFailure { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::UnderResolvedSpectrum { .. }
            | Error::TruncationNotConverged { .. } => ErrorKind::Numerical,
            Error::BandGap { .. } | Error::ZeroTransmission | Error::DenominatorFloor { .. } => {
                ErrorKind::Physical
            }
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
