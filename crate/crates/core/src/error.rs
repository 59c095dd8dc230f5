use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("invalid environment set: {0}")]
    Environment(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("capacity exceeded in subpopulation `{symbol}`: {contexts} contexts x rho {rho} > N {neurons}")]
    Capacity {
        symbol: String,
        contexts: usize,
        rho: usize,
        neurons: usize,
    },

    #[error("runaway activity: {spikes} somatic spikes exceed the budget of {limit}")]
    Runaway { spikes: usize, limit: usize },

    #[error("threshold vector has {got} entries, network has {expected} subpopulations")]
    ThetaShape { expected: usize, got: usize },

    #[error("adaptation factor {factor} outside (0, 1] for mode `{mode}`")]
    Factor { factor: f64, mode: String },

    #[error("target `{0}` is not reachable from the start")]
    Unreachable(String),

    #[error("ambiguous final activity: {0}")]
    AmbiguousActivity(String),

    #[error("unknown strategy `{name}` in registry `{registry}`")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
    },

    #[error("random environment generation exhausted after {0} attempts")]
    GeneratorExhausted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
