use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("control history not ready: {have} of {need} states recorded")]
    NotReady { have: usize, need: usize },
    #[error("period {0} is not a walking period (allowed: 1, 4, 5, 6, 8, 9; periods 2, 3 and 7 give no stable gait)")]
    UnsupportedPeriod(u32),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("search space exhausted: all {space} combinations visited")]
    Exhausted { space: usize },
    #[error("every one-leg change of the working combination has already been tried")]
    NeighbourhoodExhausted,
}

pub type Result<T> = std::result::Result<T, Error>;
