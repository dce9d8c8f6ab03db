use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (max defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("{field} out of domain: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("basis vectors are not orthonormal (max defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("relative entropy of imaginarity came out negative ({value:.3e})")]
    NegativeEntropyGap { value: f64 },

    #[error("objective returned non-finite value {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo:.6e}, g(hi) = {g_hi:.6e}")]
    NoSignChange { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("bound constant recomputation failed: {0}")]
    BoundCheck(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}
