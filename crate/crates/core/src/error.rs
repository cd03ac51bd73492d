use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations \
         (last update {last_update:.3e}, last residual {last_residual:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        last_update: f64,
        last_residual: f64,
    },

    #[error("vacuum guard: P = {density:.6e} at y = {y:.6e} fell below {floor:.6e}")]
    Vacuum { density: f64, y: f64, floor: f64 },

    #[error("singular linear system (zero pivot in column {0})")]
    Singular(usize),

    #[error("grid is not uniform near index {0}")]
    NonUniformGrid(usize),

    #[error("dense eigenproblem of size {size} exceeds the limit {max}; reduce eigen.n or raise eigen.max_dense")]
    TooLarge { size: usize, max: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

impl Error {
    /// Short machine-readable tag, used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParams(_) => "invalid_params",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Vacuum { .. } => "vacuum",
            Error::Singular(_) => "singular",
            Error::NonUniformGrid(_) => "non_uniform_grid",
            Error::TooLarge { .. } => "too_large",
            Error::Eigen(_) => "eigen",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
