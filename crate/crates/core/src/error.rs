use thiserror::Error;

/// Errors raised by the rate models, oracles and I/O layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of a formula.
    #[error("`{name}` = {value} is outside its domain ({constraint})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A configuration record violates one of its invariants.
    #[error("invalid configuration field `{field}`: {constraint} (got {value})")]
    Config {
        field: String,
        constraint: String,
        value: String,
    },

    /// The supplied document could not be parsed into a configuration.
    #[error("parse error: {0}")]
    Parse(String),

    /// The bracket handed to the root finder does not contain a sign change.
    #[error("objective `{objective}` has no sign change on [{lo}, {hi}] km (values {f_lo:e}, {f_hi:e})")]
    Bracket {
        objective: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// A sampled geometric variable hit the safety cap.
    #[error("sampled loading time exceeded {cap} rounds (success probability {eta:e})")]
    SamplingCap { cap: u64, eta: f64 },

    /// A sweep point failed; wraps the underlying error together with the distance.
    #[error("at L = {distance_km} km: {source}")]
    AtDistance {
        distance_km: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }

    pub(crate) fn config(
        field: impl Into<String>,
        constraint: impl Into<String>,
        value: impl ToString,
    ) -> Self {
        Error::Config {
            field: field.into(),
            constraint: constraint.into(),
            value: value.to_string(),
        }
    }

    /// Strips any [`Error::AtDistance`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDistance { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
