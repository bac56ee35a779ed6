use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid policy configuration: {0}")]
    InvalidPolicy(String),

    /// A tuning rule was paired with an exploration exponent it is not defined for.
    #[error("incompatible tuning: {0}")]
    Incompatible(String),

    /// Argument outside the domain of a formula.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("reward {reward} is outside the support of the {family} model")]
    RewardSupport { family: &'static str, reward: f64 },

    #[error("unsupported reward family: {0}")]
    UnsupportedFamily(String),

    #[error("empty sample")]
    EmptySample,

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
