use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("drift matrix is not Hurwitz-stable (max Re λ = {max_real_part:.3e})")]
    NotStable { max_real_part: f64 },

    #[error("Q_{t} is singular (rank {rank} < {dim}); the linear part is not strong Feller")]
    Singular { t: f64, rank: usize, dim: usize },

    #[error("Q_t is numerically singular at t = {t:.3e} (condition number {condition:.3e}) although the Kalman rank is full")]
    Conditioning { t: f64, condition: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("simulation blew up at t = {t:.4} (|state| = {norm:.3e}); reduce the step size")]
    BlowUp { t: f64, norm: f64 },

    #[error("drift violates the growth bound |G(x)| <= K(1 + |x|^m) at |x| = {at_norm:.3} (|G| = {g_norm:.3e}, bound {bound:.3e})")]
    GrowthViolation {
        at_norm: f64,
        g_norm: f64,
        bound: f64,
    },

    #[error("non-finite drift value along a path at t = {t:.4}")]
    NonFiniteDrift { t: f64 },

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    #[error("Monte-Carlo budget too small: {0}")]
    Budget(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("packaged bound exceeds the pointwise bound at x = {x:.3}, y = {y:.3} (excess {excess:.3e})")]
    PackagedVerification { x: f64, y: f64, excess: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
