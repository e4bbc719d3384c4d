use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Fourier integral did not converge (tail magnitude {tail:e} at t={t}, s={spot}, v={variance})")]
    FourierNonConvergence {
        tail: f64,
        t: f64,
        spot: f64,
        variance: f64,
    },

    #[error("expansion order {0} is not supported (maximum is 4)")]
    UnsupportedOrder(usize),

    #[error("expansion order {order} is not available for the {model} model")]
    OrderNotAvailable { order: usize, model: &'static str },

    #[error("exercise boundary bracket [{lo}, {hi}] does not contain a sign change")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("bandwidth scan is degenerate: dispersion increases at every grid step")]
    DegenerateBandwidthScan,

    #[error("bandwidth grid must be strictly decreasing with at least two entries")]
    InvalidBandwidthGrid,

    #[error("worker pool: {0}")]
    WorkerPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
