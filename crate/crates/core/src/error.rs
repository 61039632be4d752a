use thiserror::Error;

/// Errors raised by the solvers, the filter and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hurwitz (max real eigenvalue part {max_real:e})")]
    NotHurwitz { max_real: f64 },
    #[error("matrix is not Schur stable (spectral radius {radius:e})")]
    NotSchurStable { radius: f64 },
    #[error("Sylvester pencil is singular (min |eigenvalue sum| {gap:e})")]
    SingularPencil { gap: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("input must be positive: {0}")]
    NonPositiveInput(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("Schur decomposition did not converge")]
    SchurFailed,
    #[error("Q_uu regularization exhausted after {0} escalations")]
    RegularizationExhausted(usize),
    #[error("line search failed to decrease the cost")]
    LineSearchFailed,
    #[error("closed loop is unstable")]
    Unstable,
    #[error("Riccati solver failed: {0}")]
    RiccatiFailed(String),
    #[error("initial gain does not stabilize the plant")]
    NoStabilizingF0,
    #[error("zeroing entries off the sparsity pattern destabilizes the closed loop")]
    PatternDestabilizes,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dims(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(what()))
    }
}
