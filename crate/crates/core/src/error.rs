use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("direction of link {link} is degenerate (norm {norm:e})")]
    DegenerateDirection { link: usize, norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid equilibrium: {0}")]
    InvalidEquilibrium(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("controllability routes disagree (rank test: {rank_test}, eigenvector test: {eigenvector_test})")]
    RouteDisagreement {
        rank_test: bool,
        eigenvector_test: bool,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerics(_) | Error::RouteDisagreement { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
