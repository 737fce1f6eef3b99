use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown ensemble `{0}`; expected one of: {known}", known = crate::ensembles::EnsembleKind::catalog_names().join(", "))]
    UnknownEnsemble(String),

    #[error("invalid atom distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("size {n} exceeds the enumeration limit {max}")]
    SizeTooLarge { n: usize, max: usize },

    #[error("degenerate determinant trace: F_{j} vanished")]
    DegenerateTrace { j: usize },

    #[error("matrix is singular at the requested spectral parameter")]
    Singular,

    #[error("Neumann series may diverge: |t|*||R0||_(inf,1) = {lhs:.3e} >= sqrt(n)/2 = {rhs:.3e}")]
    DivergenceRisk { lhs: f64, rhs: f64 },

    #[error("adaptive quadrature did not reach tolerance {tol:.1e} (estimated error {err:.3e})")]
    Quadrature { tol: f64, err: f64 },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTrace { .. }
                | Error::Singular
                | Error::DivergenceRisk { .. }
                | Error::Quadrature { .. }
                | Error::NonFinite(_)
        )
    }
}
