use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("time grid is empty")]
    EmptyTimes,

    #[error("time grid must be increasing and start at t >= 0")]
    BadTimeGrid,

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("fit window [{t_lo}, {t_hi}] contains no usable samples")]
    EmptyFitWindow { t_lo: f64, t_hi: f64 },

    #[error("energy variance {0:.3e} is negative beyond numerical tolerance")]
    NegativeVariance(f64),

    #[error("root search did not converge: last residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("orthogonality bound violated: theta - dH*t = {excess:.3e} at t = {t}")]
    BoundViolation { t: f64, excess: f64 },

    #[error("{0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
