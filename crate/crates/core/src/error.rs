use thiserror::Error;

/// Errors raised by the detrending, statistics and bootstrap routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("regressor matrix is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("insufficient data: need {needed} usable rows, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate series: sum of squared lagged values is zero")]
    DegenerateSeries,

    #[error("zero residual variance: t statistic undefined (exact AR(1) fit)")]
    ZeroResidualVariance,

    #[error("every candidate lag has degenerate residual variance or a singular fit")]
    DegenerateSigma,

    #[error("multiplier covariance is not positive definite (pivot {pivot} = {value:.3e})")]
    NonPsdCovariance { pivot: usize, value: f64 },

    #[error("{failures} of {replications} bootstrap replications produced undefined statistics")]
    DegenerateBootstrap { failures: usize, replications: usize },

    #[error("recoloring recursion diverged with AR coefficients {pi:?}")]
    UnstableRecoloring { pi: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that stem from the input data rather than numerics or configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSeries(_)
                | Error::RankDeficient { .. }
                | Error::InsufficientData { .. }
                | Error::DegenerateSeries
        )
    }
}
