use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid interval lengths: {0}")]
    InvalidLengths(String),

    /// The requested success target is above what Scheme 1 can reach for
    /// this many slots; raise `t_max` or lower `eta`.
    #[error("success target {eta} exceeds the maximum achievable probability {p_max}")]
    Infeasible { eta: f64, p_max: f64 },

    #[error("success target {eta} cannot be met by the inverse-metric mapping (best found {best})")]
    ConstraintUnmeetable { eta: f64, best: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed table: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
